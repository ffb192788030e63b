#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "menumt/alignment.h"
#include "menumt/corpus.h"

namespace menumt {

enum class TableOrigin : std::uint8_t { kTrained = 0, kOneToOne = 1 };

std::string_view to_string(TableOrigin origin);

struct PhraseTableEntry {
  Phrase source;
  Phrase target;
  double weight = 1.0;
  TableOrigin origin = TableOrigin::kTrained;

  friend bool operator==(const PhraseTableEntry &, const PhraseTableEntry &) = default;
};

// Anything the decoder can ask "which targets does this source phrase have".
// Implementations are immutable after construction and safe to share.
class PhraseSource {
 public:
  virtual ~PhraseSource() = default;

  // Entries for exactly this source phrase, ordered by target text. Unknown
  // phrases yield an empty list.
  virtual std::vector<PhraseTableEntry> lookup(const Phrase &source) const = 0;
  virtual std::size_t max_source_len() const = 0;
  virtual TableOrigin origin() const = 0;
  virtual const std::string &topic() const = 0;
};

struct TargetOption {
  Phrase target;
  double weight = 1.0;

  friend bool operator==(const TargetOption &, const TargetOption &) = default;
};

// In-memory table keyed by the space-joined source phrase.
class PhraseTable : public PhraseSource {
 public:
  using Map = std::map<std::string, std::vector<TargetOption>>;

  explicit PhraseTable(TableOrigin origin = TableOrigin::kTrained, std::string topic = {});

  // Adds or replaces (source, target). Weight must lie in (0, 1].
  void set(const Phrase &source, const Phrase &target, double weight);

  std::vector<PhraseTableEntry> lookup(const Phrase &source) const override;
  std::size_t max_source_len() const override { return max_n_; }
  TableOrigin origin() const override { return origin_; }
  const std::string &topic() const override { return topic_; }

  const Map &entries() const { return entries_; }
  std::size_t source_count() const { return entries_.size(); }
  std::size_t entry_count() const;
  std::vector<PhraseTableEntry> all_entries() const;

  // "source ||| target ||| weight" per line.
  std::string to_text() const;
  static PhraseTable from_text(std::string_view text, TableOrigin origin, std::string topic = {});

  friend bool operator==(const PhraseTable &a, const PhraseTable &b) {
    return a.origin_ == b.origin_ && a.topic_ == b.topic_ && a.max_n_ == b.max_n_ &&
           a.entries_ == b.entries_;
  }

 private:
  Map entries_;
  TableOrigin origin_;
  std::string topic_;
  std::size_t max_n_ = 0;
};

using PhrasePairList = std::vector<std::pair<Phrase, Phrase>>;

// Every source span of length <= max_n whose linked target positions form
// a span that no outside source token links into, paired with that span.
PhrasePairList extract_phrases(const PhrasePair &pair, const PositionIndices &alignment,
                               std::size_t max_n = 3);

// Relative frequency: weight(s -> t) = count(s, t) / count(s).
PhraseTable score_table(const PhrasePairList &extracted);

// Whole phrases at weight 1.0. Identical duplicates collapse; the same
// source with two different targets is an error.
PhraseTable build_one_to_one(const std::vector<PhrasePair> &pairs, const std::string &topic);

// Union view over a trained table and any number of one-to-one tables.
// Entries from different tables coexist; the decoder arbitrates.
class LookupSet {
 public:
  LookupSet() = default;
  explicit LookupSet(std::vector<std::shared_ptr<const PhraseSource>> tables);

  void add(std::shared_ptr<const PhraseSource> table);

  std::vector<PhraseTableEntry> lookup(const Phrase &source) const;
  std::size_t max_source_len() const { return max_n_; }
  const std::vector<std::shared_ptr<const PhraseSource>> &tables() const { return tables_; }

 private:
  std::vector<std::shared_ptr<const PhraseSource>> tables_;
  std::size_t max_n_ = 0;
};

LookupSet merge_tables(std::shared_ptr<const PhraseSource> trained,
                       std::vector<std::shared_ptr<const PhraseSource>> one_to_one);

}  // namespace menumt
