#include "menumt/language_model.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "menumt/error.h"

namespace menumt {

namespace {

constexpr std::string_view kUnkWord = "<unk>";
constexpr std::string_view kBosWord = "<s>";
constexpr std::string_view kEosWord = "</s>";

double parse_double(std::string_view s, std::size_t line_no) {
  const std::string num(s);
  try {
    std::size_t used = 0;
    const double v = std::stod(num, &used);
    if (used == num.size()) return v;
  } catch (const std::exception &) {
  }
  throw ParseError("bad number \"" + num + "\"", line_no);
}

}  // namespace

std::size_t LanguageModel::KeyHash::operator()(const std::vector<WordId> &k) const noexcept {
  std::uint64_t h = 1469598103934665603ull;
  for (const WordId w : k) {
    h ^= w;
    h *= 1099511628211ull;
  }
  return static_cast<std::size_t>(h);
}

void LanguageModel::set_vocab(std::vector<std::string> words) {
  words_ = std::move(words);
  ids_.clear();
  for (WordId i = 0; i < words_.size(); ++i) ids_.emplace(words_[i], i);
}

WordId LanguageModel::id(std::string_view word) const {
  const auto it = ids_.find(std::string(word));
  return it == ids_.end() ? kUnk : it->second;
}

const LanguageModel::Entry *LanguageModel::find(std::span<const WordId> ngram) const {
  if (ngram.empty() || ngram.size() > tables_.size()) return nullptr;
  const auto &table = tables_[ngram.size() - 1];
  const auto it = table.find(std::vector<WordId>(ngram.begin(), ngram.end()));
  return it == table.end() ? nullptr : &it->second;
}

double LanguageModel::score(std::span<const WordId> context, WordId word) const {
  if (context.size() + 1 > order_) context = context.last(order_ - 1);
  std::vector<WordId> key(context.begin(), context.end());
  key.push_back(word);
  double backoff = 0.0;
  for (std::size_t len = context.size();; --len) {
    std::span<const WordId> gram(key.data() + (context.size() - len), len + 1);
    if (const Entry *e = find(gram)) return backoff + e->logprob;
    if (len == 0) break;
    if (const Entry *h = find(gram.first(len))) backoff += h->backoff;
  }
  // Every vocabulary word has a unigram entry; unreachable for ids we issued.
  throw Error("language model has no unigram entry for word id " + std::to_string(word));
}

double LanguageModel::logprob(const Phrase &tokens) const {
  std::vector<WordId> history{kBos};
  double total = 0.0;
  for (const auto &t : tokens) {
    const WordId w = id(t);
    total += score(history, w);
    history.push_back(w);
  }
  total += score(history, kEos);
  return total;
}

std::size_t LanguageModel::count(const Phrase &ngram) const {
  std::vector<WordId> key;
  for (const auto &t : ngram) {
    const WordId w = id(t);
    if (w == kUnk && t != kUnkWord) return 0;
    key.push_back(w);
  }
  const auto it = counts_.find(key);
  return it == counts_.end() ? 0 : it->second;
}

LanguageModel train_lm(const std::vector<Phrase> &sentences, std::size_t order) {
  if (order < 1) throw Error("train_lm: order must be >= 1");
  if (sentences.empty()) throw DataError("train_lm: empty corpus");

  LanguageModel lm;
  lm.order_ = order;
  {
    std::set<std::string> vocab;
    for (const auto &s : sentences) vocab.insert(s.begin(), s.end());
    for (auto special : {kUnkWord, kBosWord, kEosWord}) vocab.erase(std::string(special));
    std::vector<std::string> words{std::string(kUnkWord), std::string(kBosWord),
                                   std::string(kEosWord)};
    words.insert(words.end(), vocab.begin(), vocab.end());
    lm.set_vocab(std::move(words));
  }

  // counts[k-1]: k-gram -> count; std::map keeps n-grams sharing a context
  // adjacent and iteration deterministic.
  std::vector<std::map<std::vector<WordId>, std::size_t>> counts(order);
  for (const auto &s : sentences) {
    std::vector<WordId> ids{LanguageModel::kBos};
    for (const auto &t : s) ids.push_back(lm.id(t));
    ids.push_back(LanguageModel::kEos);
    for (std::size_t i = 1; i < ids.size(); ++i) {
      for (std::size_t k = 1; k <= order && k <= i + 1; ++k) {
        ++counts[k - 1][std::vector<WordId>(ids.begin() + (i + 1 - k), ids.begin() + i + 1)];
      }
    }
  }
  for (const auto &table : counts) lm.counts_.insert(table.begin(), table.end());

  lm.tables_.assign(order, {});

  // Unigrams over V = vocab \ {<s>}, backing off to uniform 1/|V|.
  {
    const double v = static_cast<double>(lm.words_.size() - 1);
    double c = 0.0;
    for (const auto &[g, n] : counts[0]) c += static_cast<double>(n);
    const double t = static_cast<double>(counts[0].size());
    const double unseen_mass = t / (c + t);
    const double alpha = unseen_mass / (1.0 - t / v);
    for (WordId w = 0; w < lm.words_.size(); ++w) {
      if (w == LanguageModel::kBos) {
        lm.tables_[0][{w}] = {LanguageModel::kBosLogProb, 0.0};
        continue;
      }
      const auto it = counts[0].find({w});
      const double p = it != counts[0].end() ? static_cast<double>(it->second) / (c + t)
                                             : alpha / v;
      lm.tables_[0][{w}] = {std::log10(p), 0.0};
    }
  }

  for (std::size_t k = 2; k <= order; ++k) {
    const auto &grams = counts[k - 1];
    auto it = grams.begin();
    while (it != grams.end()) {
      // [it, end) share the same (k-1)-word context.
      const std::vector<WordId> context(it->first.begin(), it->first.end() - 1);
      auto end = it;
      double c = 0.0;
      double t = 0.0;
      while (end != grams.end() && std::equal(context.begin(), context.end(), end->first.begin())) {
        c += static_cast<double>(end->second);
        t += 1.0;
        ++end;
      }
      double lower_seen = 0.0;
      const std::span<const WordId> shorter(context.data() + 1, context.size() - 1);
      for (auto g = it; g != end; ++g) {
        lm.tables_[k - 1][g->first] = {std::log10(static_cast<double>(g->second) / (c + t)), 0.0};
        lower_seen += std::pow(10.0, lm.score(shorter, g->first.back()));
      }
      const double bow = (t / (c + t)) / (1.0 - lower_seen);
      lm.tables_[k - 2].at(context).backoff = std::log10(bow);
      it = end;
    }
  }
  return lm;
}

std::string LanguageModel::to_arpa() const {
  std::string out = "\\data\\\n";
  for (std::size_t k = 1; k <= order_; ++k) {
    out += "ngram " + std::to_string(k) + "=" + std::to_string(tables_[k - 1].size()) + "\n";
  }
  char buf[64];
  for (std::size_t k = 1; k <= order_; ++k) {
    out += "\n\\" + std::to_string(k) + "-grams:\n";
    // Sort rows by surface form for a stable dump.
    std::vector<std::pair<std::string, const Entry *>> rows;
    for (const auto &[key, e] : tables_[k - 1]) {
      std::string gram;
      for (std::size_t i = 0; i < key.size(); ++i) {
        if (i) gram += ' ';
        gram += words_[key[i]];
      }
      rows.emplace_back(std::move(gram), &e);
    }
    std::sort(rows.begin(), rows.end());
    for (const auto &[gram, e] : rows) {
      std::snprintf(buf, sizeof buf, "%.17g", e->logprob);
      out += buf;
      out += '\t';
      out += gram;
      if (k < order_) {
        std::snprintf(buf, sizeof buf, "%.17g", e->backoff);
        out += '\t';
        out += buf;
      }
      out += '\n';
    }
  }
  out += "\n\\end\\\n";
  return out;
}

LanguageModel LanguageModel::from_arpa(std::string_view text) {
  LanguageModel lm;
  std::vector<std::size_t> declared;
  std::vector<std::vector<std::pair<std::vector<std::string>, Entry>>> rows;
  std::size_t section = 0;
  std::size_t line_no = 0;
  bool in_data = false;
  for (auto line : text::split(text, '\n')) {
    ++line_no;
    line = text::trim(line);
    if (line.empty()) continue;
    if (line == "\\data\\") {
      in_data = true;
      continue;
    }
    if (line == "\\end\\") break;
    if (line.front() == '\\') {
      const auto dash = line.find("-grams:");
      if (dash == std::string_view::npos) throw ParseError("unknown ARPA section", line_no);
      section = static_cast<std::size_t>(parse_double(line.substr(1, dash - 1), line_no));
      if (section < 1 || section > declared.size()) throw ParseError("undeclared order", line_no);
      in_data = false;
      continue;
    }
    if (in_data) {
      if (!line.starts_with("ngram ")) throw ParseError("expected 'ngram k=count'", line_no);
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ParseError("expected 'ngram k=count'", line_no);
      declared.push_back(static_cast<std::size_t>(parse_double(line.substr(eq + 1), line_no)));
      rows.emplace_back();
      continue;
    }
    if (section == 0) throw ParseError("n-gram line outside a section", line_no);
    const auto fields = text::split(line, '\t');
    if (fields.size() < 2 || fields.size() > 3) throw ParseError("bad n-gram line", line_no);
    std::vector<std::string> gram;
    for (auto w : text::split_whitespace(fields[1])) gram.emplace_back(w);
    if (gram.size() != section) throw ParseError("n-gram length does not match section", line_no);
    Entry e{parse_double(fields[0], line_no),
            fields.size() == 3 ? parse_double(fields[2], line_no) : 0.0};
    rows[section - 1].emplace_back(std::move(gram), e);
  }
  if (declared.empty()) throw ParseError("missing \\data\\ header");
  for (std::size_t k = 0; k < declared.size(); ++k) {
    if (rows[k].size() != declared[k]) {
      throw ParseError("order " + std::to_string(k + 1) + " declares " +
                       std::to_string(declared[k]) + " n-grams, found " +
                       std::to_string(rows[k].size()));
    }
  }

  std::set<std::string> vocab;
  for (const auto &[gram, e] : rows[0]) vocab.insert(gram[0]);
  for (auto special : {kUnkWord, kBosWord, kEosWord}) {
    if (!vocab.erase(std::string(special))) {
      throw ParseError("ARPA model lacks " + std::string(special));
    }
  }
  std::vector<std::string> words{std::string(kUnkWord), std::string(kBosWord),
                                 std::string(kEosWord)};
  words.insert(words.end(), vocab.begin(), vocab.end());
  lm.set_vocab(std::move(words));
  lm.order_ = declared.size();
  lm.tables_.assign(lm.order_, {});
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (const auto &[gram, e] : rows[k]) {
      std::vector<WordId> key;
      for (const auto &w : gram) {
        const auto it = lm.ids_.find(w);
        if (it == lm.ids_.end()) throw ParseError("n-gram word \"" + w + "\" missing from unigrams");
        key.push_back(it->second);
      }
      lm.tables_[k][key] = e;
    }
  }
  return lm;
}

}  // namespace menumt
