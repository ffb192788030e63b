#include "menumt/phrase_table.h"

#include <algorithm>
#include <cstdio>
#include <limits>

#include "menumt/error.h"

namespace menumt {

std::string_view to_string(TableOrigin origin) {
  return origin == TableOrigin::kTrained ? "trained" : "one-to-one";
}

PhraseTable::PhraseTable(TableOrigin origin, std::string topic)
    : origin_(origin), topic_(std::move(topic)) {}

void PhraseTable::set(const Phrase &source, const Phrase &target, double weight) {
  if (source.empty() || target.empty()) throw DataError("phrase table entry with an empty side");
  if (!(weight > 0.0 && weight <= 1.0)) {
    throw DataError("phrase weight out of (0,1]: " + std::to_string(weight));
  }
  auto &options = entries_[text::join(source)];
  const auto pos = std::lower_bound(
      options.begin(), options.end(), target,
      [](const TargetOption &o, const Phrase &t) { return o.target < t; });
  if (pos != options.end() && pos->target == target) {
    pos->weight = weight;
  } else {
    options.insert(pos, TargetOption{target, weight});
  }
  max_n_ = std::max(max_n_, source.size());
}

std::vector<PhraseTableEntry> PhraseTable::lookup(const Phrase &source) const {
  std::vector<PhraseTableEntry> out;
  const auto it = entries_.find(text::join(source));
  if (it == entries_.end()) return out;
  out.reserve(it->second.size());
  for (const auto &opt : it->second) out.push_back({source, opt.target, opt.weight, origin_});
  return out;
}

std::size_t PhraseTable::entry_count() const {
  std::size_t n = 0;
  for (const auto &[src, options] : entries_) n += options.size();
  return n;
}

std::vector<PhraseTableEntry> PhraseTable::all_entries() const {
  std::vector<PhraseTableEntry> out;
  for (const auto &[src, options] : entries_) {
    Phrase source;
    for (auto w : text::split_whitespace(src)) source.emplace_back(w);
    for (const auto &opt : options) out.push_back({source, opt.target, opt.weight, origin_});
  }
  return out;
}

std::string PhraseTable::to_text() const {
  std::string out;
  char buf[64];
  for (const auto &[src, options] : entries_) {
    for (const auto &opt : options) {
      std::snprintf(buf, sizeof buf, "%.17g", opt.weight);
      out += src + " ||| " + text::join(opt.target) + " ||| " + buf + '\n';
    }
  }
  return out;
}

PhraseTable PhraseTable::from_text(std::string_view text, TableOrigin origin, std::string topic) {
  PhraseTable table(origin, std::move(topic));
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto a = line.find(" ||| ");
    const auto b = a == std::string_view::npos ? a : line.find(" ||| ", a + 5);
    if (b == std::string_view::npos) throw ParseError("expected 'source ||| target ||| weight'", line_no);
    // Table text is produced by to_text, so tokens are already normalized;
    // split on spaces instead of re-running the tokenizer.
    auto words = [](std::string_view s) {
      Phrase p;
      for (auto w : text::split_whitespace(s)) p.emplace_back(w);
      return p;
    };
    const std::string num(text::trim(line.substr(b + 5)));
    double weight = 0.0;
    try {
      std::size_t used = 0;
      weight = std::stod(num, &used);
      if (used != num.size()) throw std::invalid_argument(num);
    } catch (const std::exception &) {
      throw ParseError("bad weight \"" + num + "\"", line_no);
    }
    try {
      table.set(words(line.substr(0, a)), words(line.substr(a + 5, b - a - 5)), weight);
    } catch (const DataError &e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return table;
}

PhrasePairList extract_phrases(const PhrasePair &pair, const PositionIndices &alignment,
                               std::size_t max_n) {
  if (max_n < 1) throw Error("extract_phrases: max_n must be >= 1");
  const std::size_t slen = pair.source.size();
  const std::size_t tlen = pair.target.size();
  if (alignment.links.size() != slen) throw DataError("alignment does not cover the source phrase");
  std::vector<std::size_t> link(slen);
  for (const auto &l : alignment.links) {
    if (l.source >= slen || l.target >= tlen) throw DataError("alignment link out of range");
    link[l.source] = l.target;
  }

  PhrasePairList out;
  for (std::size_t i = 0; i < slen; ++i) {
    std::size_t lo = std::numeric_limits<std::size_t>::max();
    std::size_t hi = 0;
    for (std::size_t j = i; j < slen && j - i < max_n; ++j) {
      lo = std::min(lo, link[j]);
      hi = std::max(hi, link[j]);
      bool consistent = true;
      for (std::size_t k = 0; k < slen && consistent; ++k) {
        if ((k < i || k > j) && link[k] >= lo && link[k] <= hi) consistent = false;
      }
      if (!consistent) continue;
      out.emplace_back(Phrase(pair.source.begin() + i, pair.source.begin() + j + 1),
                       Phrase(pair.target.begin() + lo, pair.target.begin() + hi + 1));
    }
  }
  return out;
}

PhraseTable score_table(const PhrasePairList &extracted) {
  if (extracted.empty()) throw DataError("score_table: nothing extracted");
  std::map<Phrase, std::map<Phrase, std::size_t>> counts;
  for (const auto &[s, t] : extracted) ++counts[s][t];
  PhraseTable table(TableOrigin::kTrained);
  for (const auto &[s, targets] : counts) {
    std::size_t total = 0;
    for (const auto &[t, c] : targets) total += c;
    for (const auto &[t, c] : targets) {
      table.set(s, t, static_cast<double>(c) / static_cast<double>(total));
    }
  }
  return table;
}

PhraseTable build_one_to_one(const std::vector<PhrasePair> &pairs, const std::string &topic) {
  PhraseTable table(TableOrigin::kOneToOne, topic);
  std::map<Phrase, Phrase> seen;
  for (const auto &p : pairs) {
    if (p.standardized) {
      throw DataError("standardized pair \"" + text::join(p.source) +
                      "\" cannot go into a one-to-one table");
    }
    const auto [it, inserted] = seen.emplace(p.source, p.target);
    if (!inserted) {
      if (it->second == p.target) continue;
      throw DataError("ambiguous one-to-one entry \"" + text::join(p.source) + "\" in topic " +
                      topic);
    }
    table.set(p.source, p.target, 1.0);
  }
  return table;
}

LookupSet::LookupSet(std::vector<std::shared_ptr<const PhraseSource>> tables) {
  for (auto &t : tables) add(std::move(t));
}

void LookupSet::add(std::shared_ptr<const PhraseSource> table) {
  if (!table) return;
  max_n_ = std::max(max_n_, table->max_source_len());
  tables_.push_back(std::move(table));
}

std::vector<PhraseTableEntry> LookupSet::lookup(const Phrase &source) const {
  std::vector<PhraseTableEntry> out;
  for (const auto &t : tables_) {
    if (source.size() > t->max_source_len()) continue;
    auto found = t->lookup(source);
    out.insert(out.end(), std::make_move_iterator(found.begin()),
               std::make_move_iterator(found.end()));
  }
  return out;
}

LookupSet merge_tables(std::shared_ptr<const PhraseSource> trained,
                       std::vector<std::shared_ptr<const PhraseSource>> one_to_one) {
  LookupSet set;
  set.add(std::move(trained));
  for (auto &t : one_to_one) set.add(std::move(t));
  return set;
}

}  // namespace menumt
