#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "menumt/text.h"

namespace menumt {

inline constexpr std::string_view kDefaultTopic = "general";

// One aligned entry of the bilingual corpora. `standardized` pairs are
// literal translations that go to training; the rest become one-to-one
// table entries grouped by `topic`.
struct PhrasePair {
  Phrase source;
  Phrase target;
  bool standardized = true;
  std::string topic = std::string(kDefaultTopic);

  friend bool operator==(const PhrasePair &, const PhrasePair &) = default;
};

struct ParallelCorpus {
  std::vector<PhrasePair> pairs;
  std::string source_lang = "es";
  std::string target_lang = "en";

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }

  friend bool operator==(const ParallelCorpus &, const ParallelCorpus &) = default;
};

enum class Side { kSource, kTarget };

std::string_view to_string(Side side);
Side side_from_string(std::string_view s);

// Corpus file: one pair per line, tab-separated
//   source <TAB> target [<TAB> std|121 [<TAB> topic]]
// Blank lines are skipped. A missing flag means "std".
ParallelCorpus parse_corpus(std::string_view raw, JoinerPolicy policy = JoinerPolicy::kReject);
ParallelCorpus read_corpus(const std::string &path, JoinerPolicy policy = JoinerPolicy::kReject);

// Always writes all four columns.
std::string serialize_corpus(const ParallelCorpus &corpus);
void write_corpus(const std::string &path, const ParallelCorpus &corpus);

struct NgramStats {
  std::size_t line_count = 0;
  std::size_t word_count = 0;
  // n -> number of distinct n-grams, for n in 1..nmax.
  std::map<std::size_t, std::size_t> distinct_ngrams;

  nlohmann::json to_json() const;
};

NgramStats corpus_stats(const ParallelCorpus &corpus, Side side, std::size_t nmax = 3);

const Phrase &side_of(const PhrasePair &pair, Side side);
Phrase &side_of(PhrasePair &pair, Side side);

}  // namespace menumt
