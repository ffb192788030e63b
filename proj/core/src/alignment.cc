#include "menumt/alignment.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>

#include "menumt/error.h"

namespace menumt {

double AlignmentModel::prob(std::string_view source, std::string_view target) const {
  const auto row = table_.find(std::string(source));
  if (row == table_.end()) return 0.0;
  const auto cell = row->second.find(std::string(target));
  return cell == row->second.end() ? 0.0 : cell->second;
}

bool AlignmentModel::has_source(std::string_view source) const {
  return table_.count(std::string(source)) != 0;
}

namespace {

struct IdCorpus {
  std::vector<std::string> source_vocab;
  std::vector<std::string> target_vocab;
  std::vector<std::vector<std::uint32_t>> sources;
  std::vector<std::vector<std::uint32_t>> targets;
};

IdCorpus index_corpus(const ParallelCorpus &corpus) {
  std::set<std::string> src, tgt;
  for (const auto &p : corpus.pairs) {
    src.insert(p.source.begin(), p.source.end());
    tgt.insert(p.target.begin(), p.target.end());
  }
  IdCorpus ids;
  ids.source_vocab.assign(src.begin(), src.end());
  ids.target_vocab.assign(tgt.begin(), tgt.end());
  auto id_of = [](const std::vector<std::string> &vocab, const std::string &w) {
    return static_cast<std::uint32_t>(std::lower_bound(vocab.begin(), vocab.end(), w) -
                                      vocab.begin());
  };
  for (const auto &p : corpus.pairs) {
    auto &s = ids.sources.emplace_back();
    for (const auto &w : p.source) s.push_back(id_of(ids.source_vocab, w));
    auto &t = ids.targets.emplace_back();
    for (const auto &w : p.target) t.push_back(id_of(ids.target_vocab, w));
  }
  return ids;
}

// Sparse rows keyed by target id; only co-occurring pairs ever get mass.
using Rows = std::vector<std::unordered_map<std::uint32_t, double>>;

double lookup(const Rows &rows, std::uint32_t s, std::uint32_t t, double uniform) {
  if (uniform > 0.0) return uniform;
  const auto it = rows[s].find(t);
  return it == rows[s].end() ? 0.0 : it->second;
}

// One E-step. Returns the log-likelihood of the current parameters and
// fills `counts` with expected link counts. `uniform` > 0 stands in for the
// initial table.
double expectation(const IdCorpus &c, const Rows &t_table, double uniform, Rows &counts) {
  double ll = 0.0;
  std::vector<double> scratch;
  for (std::size_t p = 0; p < c.sources.size(); ++p) {
    const auto &src = c.sources[p];
    const auto &tgt = c.targets[p];
    scratch.resize(src.size());
    for (const std::uint32_t t : tgt) {
      double denom = 0.0;
      for (std::size_t i = 0; i < src.size(); ++i) {
        scratch[i] = lookup(t_table, src[i], t, uniform);
        denom += scratch[i];
      }
      ll += std::log(denom / static_cast<double>(src.size()));
      for (std::size_t i = 0; i < src.size(); ++i) counts[src[i]][t] += scratch[i] / denom;
    }
  }
  return ll;
}

}  // namespace

AlignmentModel train_em(const ParallelCorpus &training, std::size_t iterations) {
  if (training.empty()) throw DataError("train_em: empty training corpus");
  if (iterations < 1) throw Error("train_em: iterations must be >= 1");

  const IdCorpus c = index_corpus(training);
  const double uniform = 1.0 / static_cast<double>(c.target_vocab.size());

  Rows t_table(c.source_vocab.size());
  AlignmentModel model;
  for (std::size_t it = 0; it < iterations; ++it) {
    Rows counts(c.source_vocab.size());
    const double ll = expectation(c, t_table, it == 0 ? uniform : 0.0, counts);
    if (it > 0) model.trace_.push_back(ll);
    for (std::size_t s = 0; s < counts.size(); ++s) {
      double total = 0.0;
      for (const auto &[t, v] : counts[s]) total += v;
      for (auto &[t, v] : counts[s]) v /= total;
    }
    t_table = std::move(counts);
  }
  {
    Rows scratch(c.source_vocab.size());
    model.trace_.push_back(expectation(c, t_table, 0.0, scratch));
  }
  model.iterations_run_ = iterations;

  for (std::size_t s = 0; s < t_table.size(); ++s) {
    auto &row = model.table_[c.source_vocab[s]];
    for (const auto &[t, v] : t_table[s]) row[c.target_vocab[t]] = v;
  }
  return model;
}

std::string AlignmentModel::serialize() const {
  std::string out;
  char buf[64];
  for (const auto &[src, row] : table_) {
    std::vector<std::pair<std::string, double>> cells(row.begin(), row.end());
    std::stable_sort(cells.begin(), cells.end(),
                     [](const auto &a, const auto &b) { return a.second > b.second; });
    for (const auto &[tgt, p] : cells) {
      std::snprintf(buf, sizeof buf, "%.17g", p);
      out += src + '\t' + tgt + '\t' + buf + '\n';
    }
  }
  return out;
}

AlignmentModel AlignmentModel::parse(std::string_view text) {
  AlignmentModel model;
  std::size_t line_no = 0;
  for (auto line : text::split(text, '\n')) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, '\t');
    if (fields.size() != 3) throw ParseError("expected source<TAB>target<TAB>prob", line_no);
    double p = 0.0;
    const std::string num(text::trim(fields[2]));
    try {
      std::size_t used = 0;
      p = std::stod(num, &used);
      if (used != num.size()) throw std::invalid_argument(num);
    } catch (const std::exception &) {
      throw ParseError("bad probability \"" + num + "\"", line_no);
    }
    model.table_[std::string(fields[0])][std::string(fields[1])] = p;
  }
  return model;
}

std::string PositionIndices::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(links[i].source) + "=" + std::to_string(links[i].target);
  }
  return out;
}

PositionIndices viterbi_align(const AlignmentModel &model, const PhrasePair &pair) {
  PositionIndices out;
  if (pair.target.empty()) throw DataError("viterbi_align: empty target side");
  const std::size_t last_target = pair.target.size() - 1;
  for (std::size_t i = 0; i < pair.source.size(); ++i) {
    AlignmentLink link{i, std::min(i, last_target), true};
    double best = 0.0;
    for (std::size_t j = 0; j < pair.target.size(); ++j) {
      const double p = model.prob(pair.source[i], pair.target[j]);
      if (p > best) {
        best = p;
        link.target = j;
        link.low_confidence = false;
      }
    }
    out.links.push_back(link);
  }
  return out;
}

}  // namespace menumt
