#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "menumt/corpus.h"

namespace menumt {

// Lexical translation table t(target | source) trained by EM, IBM-1 style,
// without a NULL word. Every source token's row sums to one.
class AlignmentModel {
 public:
  double prob(std::string_view source, std::string_view target) const;
  bool has_source(std::string_view source) const;

  // source -> (target -> probability); ordered for deterministic output.
  const std::map<std::string, std::map<std::string, double>> &table() const { return table_; }
  std::size_t iterations_run() const { return iterations_run_; }
  // Corpus log-likelihood (natural log) after each iteration.
  const std::vector<double> &log_likelihood_trace() const { return trace_; }

  // "source<TAB>target<TAB>prob" sorted by source then descending prob.
  std::string serialize() const;
  static AlignmentModel parse(std::string_view text);

 private:
  friend AlignmentModel train_em(const ParallelCorpus &, std::size_t);

  std::map<std::string, std::map<std::string, double>> table_;
  std::size_t iterations_run_ = 0;
  std::vector<double> trace_;
};

// Uniform initialization over the target vocabulary, fixed iteration count.
AlignmentModel train_em(const ParallelCorpus &training, std::size_t iterations = 10);

struct AlignmentLink {
  std::size_t source = 0;
  std::size_t target = 0;
  // Set when the source token had no usable probability mass (OOV).
  bool low_confidence = false;

  friend bool operator==(const AlignmentLink &, const AlignmentLink &) = default;
};

// One link per source token, in source order.
struct PositionIndices {
  std::vector<AlignmentLink> links;

  // Table-style rendering: "0=1, 1=0, 2=0".
  std::string to_string() const;
};

PositionIndices viterbi_align(const AlignmentModel &model, const PhrasePair &pair);

}  // namespace menumt
