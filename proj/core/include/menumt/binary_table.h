#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "menumt/phrase_table.h"

namespace menumt {

// Read-only byte backing for a binary table: either owned memory or a
// memory-mapped file.
class ByteStore {
 public:
  virtual ~ByteStore() = default;
  virtual std::span<const std::uint8_t> bytes() const = 0;
};

class OwnedBytes final : public ByteStore {
 public:
  explicit OwnedBytes(std::vector<std::uint8_t> data) : data_(std::move(data)) {}
  std::span<const std::uint8_t> bytes() const override { return data_; }

 private:
  std::vector<std::uint8_t> data_;
};

// RAII read-only mmap. Pages are faulted in as lookups touch them.
class MappedFile final : public ByteStore {
 public:
  explicit MappedFile(const std::string &path);
  ~MappedFile() override;
  MappedFile(const MappedFile &) = delete;
  MappedFile &operator=(const MappedFile &) = delete;

  std::span<const std::uint8_t> bytes() const override { return {data_, size_}; }

 private:
  const std::uint8_t *data_ = nullptr;
  std::size_t size_ = 0;
};

// Layout (all integers little-endian):
//   "MLPT1"
//   u8  origin (0 trained, 1 one-to-one)
//   u32 topic length, topic bytes
//   u32 max source length
//   u32 source phrase count S
//   u32 entry count E
//   S x u32 record offsets, relative to the first record
//   S records, sorted bytewise by source phrase:
//     u32 len, source bytes (space-joined tokens)
//     u32 target count, then per target: u32 len, bytes, f64 weight
//   u32 CRC-32 of every preceding byte
std::vector<std::uint8_t> serialize_binary(const PhraseTable &table);

// Binary-searches the offset index and decodes only the matching record.
class BinaryTableHandle final : public PhraseSource {
 public:
  // Validates magic, header bounds and (optionally) the trailing CRC.
  explicit BinaryTableHandle(std::shared_ptr<const ByteStore> store, bool verify_checksum = true);

  std::vector<PhraseTableEntry> lookup(const Phrase &source) const override;
  std::size_t max_source_len() const override { return max_n_; }
  TableOrigin origin() const override { return origin_; }
  const std::string &topic() const override { return topic_; }

  std::size_t source_count() const { return source_count_; }
  std::size_t entry_count() const { return entry_count_; }

  // Decodes everything back into memory.
  PhraseTable materialize() const;

 private:
  std::string_view key_at(std::size_t index) const;
  std::vector<PhraseTableEntry> decode_record(std::size_t index, const Phrase &source) const;

  std::shared_ptr<const ByteStore> store_;
  std::span<const std::uint8_t> bytes_;
  TableOrigin origin_ = TableOrigin::kTrained;
  std::string topic_;
  std::size_t max_n_ = 0;
  std::size_t source_count_ = 0;
  std::size_t entry_count_ = 0;
  std::size_t index_pos_ = 0;
  std::size_t records_pos_ = 0;
  std::size_t records_end_ = 0;
};

std::shared_ptr<const BinaryTableHandle> open_ondemand(std::vector<std::uint8_t> bytes);
std::shared_ptr<const BinaryTableHandle> open_ondemand_file(const std::string &path);

}  // namespace menumt
