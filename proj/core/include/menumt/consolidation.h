#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "menumt/corpus.h"

namespace menumt {

// Rewrites a multi-word n-gram into a single joined token. Rules are
// applied in ascending `order_index`; specific patterns are expected to
// precede the general ones they contain.
struct ConsolidationRule {
  Phrase pattern;
  Token joined;
  std::size_t order_index = 0;
  Side side = Side::kSource;

  friend bool operator==(const ConsolidationRule &, const ConsolidationRule &) = default;
};

// Validates the pattern (>= 2 plain tokens) and derives `joined`.
ConsolidationRule make_rule(Phrase pattern, std::size_t order_index, Side side = Side::kSource);

struct CorporaSplit {
  ParallelCorpus training;
  std::map<std::string, std::vector<PhrasePair>> one_to_one;
};

CorporaSplit split_standardized(const ParallelCorpus &corpus);

// Each rule in turn scans left to right and replaces every non-overlapping
// occurrence of its pattern. Earlier rules consume spans first.
Phrase apply_rules(const Phrase &phrase, const std::vector<ConsolidationRule> &rules);

// Pairs whose target is strictly shorter than their source.
std::vector<PhrasePair> mark_for_consolidation(const ParallelCorpus &corpus);

struct AutoConsolidationOptions {
  std::size_t min_support = 2;
  std::size_t max_len = 4;
};

// Finds source n-grams (2..max_len) shared by at least `min_support` marked
// phrases. An n-gram is dropped when a longer candidate containing it
// occurs in exactly the same phrases (it would never fire on its own).
// Output order: longer first, then higher support, then lexicographic.
std::vector<ConsolidationRule> auto_consolidate(const std::vector<PhrasePair> &marked,
                                                AutoConsolidationOptions options = {});

// Rewrites the training set only; one-to-one sets pass through untouched.
CorporaSplit consolidate_corpus(const CorporaSplit &split,
                                const std::vector<ConsolidationRule> &source_rules,
                                const std::vector<ConsolidationRule> &target_rules);

// Rule file: "side<TAB>pattern tokens" per line, application order, '#'
// comments. Returned rules carry sequential order indices.
std::vector<ConsolidationRule> parse_rules(std::string_view text);
std::vector<ConsolidationRule> read_rules(const std::string &path);
std::string serialize_rules(const std::vector<ConsolidationRule> &rules);

// Splits a mixed rule list by side, preserving order.
std::vector<ConsolidationRule> rules_for_side(const std::vector<ConsolidationRule> &rules,
                                              Side side);

}  // namespace menumt
