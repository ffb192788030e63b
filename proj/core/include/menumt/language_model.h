#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "menumt/text.h"

namespace menumt {

using WordId = std::uint32_t;

// Backoff n-gram model with Witten-Bell discounting. Scores are log10.
//
// For an observed context h with c(h) tokens following it and T(h)
// distinct followers:
//   p(w | h) = c(h w) / (c(h) + T(h))                  if h w was seen
//            = bow(h) * p(w | h')                      otherwise
//   bow(h)   = [T(h) / (c(h) + T(h))] / [1 - sum_{seen w} p(w | h')]
// where h' drops the oldest word. Unigrams back off to a uniform
// distribution over the vocabulary (including <unk>, excluding <s>), so
// every context sums to one and every word has non-zero probability.
class LanguageModel {
 public:
  static constexpr WordId kUnk = 0;
  static constexpr WordId kBos = 1;
  static constexpr WordId kEos = 2;

  // Log10 probability stored for <s>, which is never predicted.
  static constexpr double kBosLogProb = -99.0;

  struct Entry {
    double logprob = 0.0;
    double backoff = 0.0;  // log10; 0 means "no discount" (bow = 1)
  };

  std::size_t order() const { return order_; }
  std::size_t vocab_size() const { return words_.size(); }
  const std::vector<std::string> &words() const { return words_; }

  // OOV maps to kUnk.
  WordId id(std::string_view word) const;

  // log10 p(word | context); `context` holds ids oldest-first and may be
  // longer than order-1 (only the tail is used).
  double score(std::span<const WordId> context, WordId word) const;

  // Full-sentence score with <s> and </s> padding.
  double logprob(const Phrase &tokens) const;

  // Raw training count of an n-gram (tokens, "<s>"/"</s>" allowed). Zero
  // when the model was loaded from ARPA text.
  std::size_t count(const Phrase &ngram) const;

  const Entry *find(std::span<const WordId> ngram) const;

  // ARPA-style dump: \data\ header with per-order counts, then
  // "logprob<TAB>ngram<TAB>backoff" lines. Values round-trip exactly.
  std::string to_arpa() const;
  static LanguageModel from_arpa(std::string_view text);

 private:
  friend LanguageModel train_lm(const std::vector<Phrase> &, std::size_t);

  struct KeyHash {
    std::size_t operator()(const std::vector<WordId> &k) const noexcept;
  };
  using Table = std::unordered_map<std::vector<WordId>, Entry, KeyHash>;

  void set_vocab(std::vector<std::string> words);

  std::size_t order_ = 3;
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> ids_;
  // tables_[k - 1] holds k-grams.
  std::vector<Table> tables_;
  std::map<std::vector<WordId>, std::size_t> counts_;
};

// `order` >= 1; corpus must contain at least one sentence.
LanguageModel train_lm(const std::vector<Phrase> &sentences, std::size_t order = 3);

inline double lm_logprob(const LanguageModel &lm, const Phrase &tokens) {
  return lm.logprob(tokens);
}

}  // namespace menumt
