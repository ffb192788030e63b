#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "menumt/consolidation.h"
#include "menumt/language_model.h"
#include "menumt/phrase_table.h"

namespace menumt {

// Log-linear feature weights. Costs are weighted sums of non-negative
// feature values, except the word penalty whose default weight is negative
// so that longer outputs are preferred.
struct DecoderWeights {
  double translation = 1.0;
  double lm = 0.5;
  double distortion = 0.3;
  double word_penalty = -0.1;

  nlohmann::json to_json() const;
  static DecoderWeights from_json(const nlohmann::json &j);
};

struct DecoderOptions {
  std::size_t k = 5;
  std::size_t beam_size = 50;
  std::size_t max_jump = 3;
  // Translation-model cost (log10 units) charged for copying an unknown
  // word through.
  double oov_penalty = 10.0;
};

// Feature values of a (partial) translation.
//   tm   -sum log10(phrase weight), plus oov_penalty per copied word
//   lm   -log10 p_LM(output), </s> included once complete
//   dist sum of |start(next span) - end(previous span) - 1|
//   wp   number of output words
struct CostComponents {
  double tm = 0.0;
  double lm = 0.0;
  double dist = 0.0;
  double wp = 0.0;

  double weighted(const DecoderWeights &w) const {
    return w.translation * tm + w.lm * lm + w.distortion * dist + w.word_penalty * wp;
  }
};

struct AppliedPhrase {
  std::size_t begin = 0;  // source span [begin, end)
  std::size_t end = 0;
  Phrase target;
  double weight = 1.0;
  TableOrigin origin = TableOrigin::kTrained;
  bool copied = false;  // OOV pass-through
};

struct Translation {
  std::size_t rank = 0;  // 1-based
  std::string text;      // detokenized
  Phrase tokens;         // raw output tokens, joiners intact
  double cost = 0.0;
  CostComponents components;
  std::vector<AppliedPhrase> segmentation;  // in application order
};

// At most k finished translations, sorted by cost (ties by text), with
// distinct output tokens.
struct KBestList {
  std::vector<Translation> items;
  std::vector<Token> oov;

  // [{rank, text, cost, components:{tm,lm,dist,wp}}]
  nlohmann::json to_json() const;
};

// Stack decoder. One stack per number of covered source words; each stack
// is recombined on (coverage, last span end, LM state), keeping up to k
// distinct outputs per state, then histogram-pruned to beam_size using
// cost plus a future-cost estimate.
//
// Reentrant: the tables and LM are only read.
class Decoder {
 public:
  Decoder(const LookupSet &tables, const LanguageModel &lm, DecoderWeights weights = {},
          DecoderOptions options = {});

  // Tokenizes `input` (joined tokens allowed), optionally rewrites it with
  // `pre_rules`, and decodes. Throws DataError on empty input.
  KBestList translate(std::string_view input,
                      const std::vector<ConsolidationRule> *pre_rules = nullptr) const;
  KBestList translate_tokens(const Phrase &tokens) const;

  const DecoderWeights &weights() const { return weights_; }
  const DecoderOptions &options() const { return options_; }

 private:
  const LookupSet &tables_;
  const LanguageModel &lm_;
  DecoderWeights weights_;
  DecoderOptions options_;
};

// Free-function form of Decoder::translate.
KBestList translate(std::string_view input, const LookupSet &lookup, const LanguageModel &lm,
                    const DecoderWeights &weights, std::size_t k = 5, std::size_t beam_size = 50,
                    const std::vector<ConsolidationRule> *pre_rules = nullptr);

// Orders translations by cost, treating costs within 1e-9 as equal and
// falling back to the detokenized text.
bool translation_less(double cost_a, const std::string &text_a, double cost_b,
                      const std::string &text_b);

}  // namespace menumt
