#include "menumt/consolidation.h"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "menumt/error.h"
#include "menumt/io.h"

namespace menumt {

ConsolidationRule make_rule(Phrase pattern, std::size_t order_index, Side side) {
  if (pattern.size() < 2) throw DataError("consolidation pattern needs at least two tokens");
  for (const auto &t : pattern) {
    if (t.empty() || t.find(kJoiner) != std::string::npos) {
      throw DataError("consolidation pattern token \"" + t + "\" must be a plain word");
    }
  }
  ConsolidationRule rule;
  rule.joined = text::join(pattern, std::string_view(&kJoiner, 1));
  rule.pattern = std::move(pattern);
  rule.order_index = order_index;
  rule.side = side;
  return rule;
}

CorporaSplit split_standardized(const ParallelCorpus &corpus) {
  CorporaSplit split;
  split.training.source_lang = corpus.source_lang;
  split.training.target_lang = corpus.target_lang;
  for (const auto &pair : corpus.pairs) {
    if (pair.standardized) {
      split.training.pairs.push_back(pair);
    } else {
      split.one_to_one[pair.topic].push_back(pair);
    }
  }
  return split;
}

namespace {

Phrase apply_rule(const Phrase &phrase, const ConsolidationRule &rule) {
  const std::size_t n = rule.pattern.size();
  if (phrase.size() < n) return phrase;
  Phrase out;
  out.reserve(phrase.size());
  std::size_t i = 0;
  while (i < phrase.size()) {
    if (i + n <= phrase.size() &&
        std::equal(rule.pattern.begin(), rule.pattern.end(), phrase.begin() + i)) {
      out.push_back(rule.joined);
      i += n;
    } else {
      out.push_back(phrase[i]);
      ++i;
    }
  }
  return out;
}

}  // namespace

Phrase apply_rules(const Phrase &phrase, const std::vector<ConsolidationRule> &rules) {
  Phrase out = phrase;
  for (const auto &rule : rules) out = apply_rule(out, rule);
  return out;
}

std::vector<PhrasePair> mark_for_consolidation(const ParallelCorpus &corpus) {
  std::vector<PhrasePair> marked;
  for (const auto &pair : corpus.pairs) {
    if (pair.target.size() < pair.source.size()) marked.push_back(pair);
  }
  return marked;
}

std::vector<ConsolidationRule> auto_consolidate(const std::vector<PhrasePair> &marked,
                                                AutoConsolidationOptions options) {
  if (options.min_support < 2) throw Error("auto_consolidate: min_support must be >= 2");
  if (options.max_len < 2) throw Error("auto_consolidate: max_len must be >= 2");

  // n-gram -> indices of the marked phrases containing it (ascending, unique).
  std::unordered_map<std::string, std::vector<std::size_t>> support;
  std::unordered_map<std::string, Phrase> patterns;
  for (std::size_t p = 0; p < marked.size(); ++p) {
    const Phrase &src = marked[p].source;
    for (std::size_t n = 2; n <= options.max_len; ++n) {
      for (std::size_t i = 0; i + n <= src.size(); ++i) {
        Phrase gram(src.begin() + i, src.begin() + i + n);
        if (std::any_of(gram.begin(), gram.end(),
                        [](const Token &t) { return t.find(kJoiner) != Token::npos; })) {
          continue;
        }
        std::string key = text::join(gram);
        auto &ids = support[key];
        if (ids.empty() || ids.back() != p) ids.push_back(p);
        patterns.try_emplace(std::move(key), std::move(gram));
      }
    }
  }

  struct Candidate {
    const Phrase *pattern;
    const std::vector<std::size_t> *phrases;
  };
  std::vector<Candidate> frequent;
  for (const auto &[key, ids] : support) {
    if (ids.size() >= options.min_support) frequent.push_back({&patterns.at(key), &ids});
  }

  // Closed-pattern filter: a sub-n-gram with the same supporting phrases as
  // one of its super-n-grams is always consumed by the longer rule first.
  auto contains = [](const Phrase &outer, const Phrase &inner) {
    return std::search(outer.begin(), outer.end(), inner.begin(), inner.end()) != outer.end();
  };
  std::vector<Candidate> kept;
  for (const auto &c : frequent) {
    const bool subsumed = std::any_of(frequent.begin(), frequent.end(), [&](const Candidate &o) {
      return o.pattern->size() > c.pattern->size() && *o.phrases == *c.phrases &&
             contains(*o.pattern, *c.pattern);
    });
    if (!subsumed) kept.push_back(c);
  }

  std::sort(kept.begin(), kept.end(), [](const Candidate &a, const Candidate &b) {
    if (a.pattern->size() != b.pattern->size()) return a.pattern->size() > b.pattern->size();
    if (a.phrases->size() != b.phrases->size()) return a.phrases->size() > b.phrases->size();
    return *a.pattern < *b.pattern;
  });

  std::vector<ConsolidationRule> rules;
  rules.reserve(kept.size());
  for (const auto &c : kept) rules.push_back(make_rule(*c.pattern, rules.size(), Side::kSource));
  return rules;
}

CorporaSplit consolidate_corpus(const CorporaSplit &split,
                                const std::vector<ConsolidationRule> &source_rules,
                                const std::vector<ConsolidationRule> &target_rules) {
  CorporaSplit out = split;
  for (auto &pair : out.training.pairs) {
    pair.source = apply_rules(pair.source, source_rules);
    pair.target = apply_rules(pair.target, target_rules);
  }
  return out;
}

std::vector<ConsolidationRule> parse_rules(std::string_view text) {
  std::vector<ConsolidationRule> rules;
  std::size_t line_no = 0;
  for (auto line : text::split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw ParseError("expected side<TAB>pattern", line_no);
    try {
      const Side side = side_from_string(text::trim(line.substr(0, tab)));
      rules.push_back(make_rule(tokenize(line.substr(tab + 1)), rules.size(), side));
    } catch (const ParseError &e) {
      throw ParseError(e.what(), line_no);
    } catch (const DataError &e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return rules;
}

std::vector<ConsolidationRule> read_rules(const std::string &path) {
  return parse_rules(io::read_file(path));
}

std::string serialize_rules(const std::vector<ConsolidationRule> &rules) {
  std::vector<const ConsolidationRule *> ordered;
  for (const auto &r : rules) ordered.push_back(&r);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](auto *a, auto *b) { return a->order_index < b->order_index; });
  std::string out;
  for (const auto *r : ordered) {
    out += to_string(r->side);
    out += '\t';
    out += text::join(r->pattern);
    out += '\n';
  }
  return out;
}

std::vector<ConsolidationRule> rules_for_side(const std::vector<ConsolidationRule> &rules,
                                              Side side) {
  std::vector<ConsolidationRule> out;
  for (const auto &r : rules) {
    if (r.side == side) out.push_back(r);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto &a, const auto &b) { return a.order_index < b.order_index; });
  return out;
}

}  // namespace menumt
