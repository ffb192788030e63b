#include "menumt/binary_table.h"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <bit>
#include <cstring>
#include <limits>

#include "menumt/error.h"
#include "menumt/io.h"

namespace menumt {

namespace {

constexpr char kMagic[] = {'M', 'L', 'P', 'T', '1'};
constexpr std::size_t kMagicSize = sizeof kMagic;

class Writer {
 public:
  void bytes(const void *p, std::size_t n) {
    const auto *b = static_cast<const std::uint8_t *>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint64_t v) {
    if (v > std::numeric_limits<std::uint32_t>::max()) throw DataError("binary table too large");
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  void str(std::string_view s) {
    u32(s.size());
    bytes(s.data(), s.size());
  }
  void patch_u32(std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
  }
  std::size_t size() const { return out_.size(); }
  std::vector<std::uint8_t> take() { return std::move(out_); }
  std::span<const std::uint8_t> view() const { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

// Bounds-checked cursor over the mapped bytes.
class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, std::size_t pos, std::size_t end)
      : bytes_(bytes), pos_(pos), end_(end) {}

  std::size_t pos() const { return pos_; }

  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }
  std::string_view str() {
    const std::uint32_t n = u32();
    need(n);
    std::string_view s(reinterpret_cast<const char *>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (n > end_ - pos_) throw DataError("binary table: truncated record");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
  std::size_t end_;
};

std::uint32_t read_u32_at(std::span<const std::uint8_t> bytes, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[at + i]) << (8 * i);
  return v;
}

Phrase split_words(std::string_view s) {
  Phrase p;
  for (auto w : text::split_whitespace(s)) p.emplace_back(w);
  return p;
}

}  // namespace

MappedFile::MappedFile(const std::string &path) {
  const int fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
  if (fd < 0) throw Error("cannot open " + path);
  struct stat st {};
  if (::fstat(fd, &st) != 0) {
    ::close(fd);
    throw Error("cannot stat " + path);
  }
  size_ = static_cast<std::size_t>(st.st_size);
  if (size_ > 0) {
    void *p = ::mmap(nullptr, size_, PROT_READ, MAP_PRIVATE, fd, 0);
    if (p == MAP_FAILED) {
      ::close(fd);
      throw Error("cannot mmap " + path);
    }
    data_ = static_cast<const std::uint8_t *>(p);
  }
  ::close(fd);
}

MappedFile::~MappedFile() {
  if (data_) ::munmap(const_cast<std::uint8_t *>(data_), size_);
}

std::vector<std::uint8_t> serialize_binary(const PhraseTable &table) {
  Writer w;
  w.bytes(kMagic, kMagicSize);
  w.u8(static_cast<std::uint8_t>(table.origin()));
  w.str(table.topic());
  w.u32(table.max_source_len());
  w.u32(table.source_count());
  w.u32(table.entry_count());

  const std::size_t index_pos = w.size();
  for (std::size_t i = 0; i < table.source_count(); ++i) w.u32(0);
  const std::size_t records_pos = w.size();

  // std::map<std::string> iterates in bytewise order, which is what lookup
  // binary-searches on.
  std::size_t i = 0;
  for (const auto &[source, options] : table.entries()) {
    w.patch_u32(index_pos + 4 * i++, static_cast<std::uint32_t>(w.size() - records_pos));
    w.str(source);
    w.u32(options.size());
    for (const auto &opt : options) {
      w.str(text::join(opt.target));
      w.f64(opt.weight);
    }
  }
  w.u32(io::crc32(w.view()));
  return w.take();
}

BinaryTableHandle::BinaryTableHandle(std::shared_ptr<const ByteStore> store, bool verify_checksum)
    : store_(std::move(store)), bytes_(store_->bytes()) {
  if (bytes_.size() < kMagicSize + 4 ||
      std::memcmp(bytes_.data(), kMagic, kMagicSize) != 0) {
    throw DataError("binary table: bad magic");
  }
  const std::size_t body = bytes_.size() - 4;
  if (verify_checksum && io::crc32(bytes_.first(body)) != read_u32_at(bytes_, body)) {
    throw DataError("binary table: checksum mismatch");
  }
  Reader r(bytes_, kMagicSize, body);
  const std::uint8_t origin = r.u8();
  if (origin > 1) throw DataError("binary table: unknown origin tag");
  origin_ = static_cast<TableOrigin>(origin);
  topic_ = std::string(r.str());
  max_n_ = r.u32();
  source_count_ = r.u32();
  entry_count_ = r.u32();
  index_pos_ = r.pos();
  if (source_count_ > (body - index_pos_) / 4) throw DataError("binary table: index out of bounds");
  records_pos_ = index_pos_ + 4 * source_count_;
  records_end_ = body;
}

std::string_view BinaryTableHandle::key_at(std::size_t index) const {
  const std::size_t offset = read_u32_at(bytes_, index_pos_ + 4 * index);
  if (offset > records_end_ - records_pos_) throw DataError("binary table: bad record offset");
  Reader r(bytes_, records_pos_ + offset, records_end_);
  return r.str();
}

std::vector<PhraseTableEntry> BinaryTableHandle::decode_record(std::size_t index,
                                                               const Phrase &source) const {
  const std::size_t offset = read_u32_at(bytes_, index_pos_ + 4 * index);
  Reader r(bytes_, records_pos_ + offset, records_end_);
  r.str();
  const std::uint32_t n = r.u32();
  std::vector<PhraseTableEntry> out;
  out.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto target = r.str();
    const double weight = r.f64();
    out.push_back({source, split_words(target), weight, origin_});
  }
  return out;
}

std::vector<PhraseTableEntry> BinaryTableHandle::lookup(const Phrase &source) const {
  if (source.empty() || source.size() > max_n_) return {};
  const std::string key = text::join(source);
  std::size_t lo = 0;
  std::size_t hi = source_count_;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    const int cmp = key_at(mid).compare(key);
    if (cmp == 0) return decode_record(mid, source);
    if (cmp < 0) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return {};
}

PhraseTable BinaryTableHandle::materialize() const {
  PhraseTable table(origin_, topic_);
  for (std::size_t i = 0; i < source_count_; ++i) {
    const Phrase source = split_words(key_at(i));
    for (const auto &e : decode_record(i, source)) table.set(e.source, e.target, e.weight);
  }
  return table;
}

std::shared_ptr<const BinaryTableHandle> open_ondemand(std::vector<std::uint8_t> bytes) {
  return std::make_shared<BinaryTableHandle>(std::make_shared<OwnedBytes>(std::move(bytes)));
}

std::shared_ptr<const BinaryTableHandle> open_ondemand_file(const std::string &path) {
  return std::make_shared<BinaryTableHandle>(std::make_shared<MappedFile>(path));
}

}  // namespace menumt
