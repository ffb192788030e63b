#include "menumt/decoder.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <unordered_map>

#include "menumt/error.h"

namespace menumt {

nlohmann::json DecoderWeights::to_json() const {
  return {{"translation", translation},
          {"lm", lm},
          {"distortion", distortion},
          {"word_penalty", word_penalty}};
}

DecoderWeights DecoderWeights::from_json(const nlohmann::json &j) {
  DecoderWeights w;
  w.translation = j.value("translation", w.translation);
  w.lm = j.value("lm", w.lm);
  w.distortion = j.value("distortion", w.distortion);
  w.word_penalty = j.value("word_penalty", w.word_penalty);
  for (double v : {w.translation, w.lm, w.distortion, w.word_penalty}) {
    if (!std::isfinite(v)) throw DataError("decoder weights must be finite");
  }
  return w;
}

nlohmann::json KBestList::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto &t : items) {
    out.push_back({{"rank", t.rank},
                   {"text", t.text},
                   {"cost", t.cost},
                   {"components",
                    {{"tm", t.components.tm},
                     {"lm", t.components.lm},
                     {"dist", t.components.dist},
                     {"wp", t.components.wp}}}});
  }
  return out;
}

bool translation_less(double cost_a, const std::string &text_a, double cost_b,
                      const std::string &text_b) {
  if (std::abs(cost_a - cost_b) > 1e-9) return cost_a < cost_b;
  return text_a < text_b;
}

namespace {

constexpr std::size_t kMaxInputTokens = 64;

struct Option {
  std::size_t begin = 0;
  std::size_t end = 0;
  Phrase target;
  std::vector<WordId> ids;
  double tm = 0.0;  // feature value, not weighted
  double weight = 1.0;
  TableOrigin origin = TableOrigin::kTrained;
  bool copied = false;
};

struct Hyp {
  std::uint64_t coverage = 0;
  std::size_t covered = 0;
  std::size_t last_end = 0;
  std::vector<WordId> lm_state;
  CostComponents comp;
  double cost = 0.0;
  double future = 0.0;
  int parent = -1;
  int option = -1;
  std::string surface;  // space-joined output tokens
};

std::string recombination_key(const Hyp &h) {
  std::string key;
  key.reserve(16 + 4 * h.lm_state.size());
  auto put = [&key](std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) key.push_back(static_cast<char>(v >> (8 * i)));
  };
  put(h.coverage, 8);
  put(h.last_end, 1);
  for (const WordId w : h.lm_state) put(w, 4);
  return key;
}

class Search {
 public:
  Search(const Phrase &input, const LookupSet &tables, const LanguageModel &lm,
         const DecoderWeights &weights, const DecoderOptions &options)
      : input_(input), tables_(tables), lm_(lm), w_(weights), opt_(options) {}

  KBestList run();

 private:
  void collect_options();
  void compute_future_costs();
  double future_for(std::uint64_t coverage) const;
  void add(std::size_t stack, Hyp hyp);
  bool better(const Hyp &a, const Hyp &b) const {
    return translation_less(a.cost, a.surface, b.cost, b.surface);
  }

  const Phrase &input_;
  const LookupSet &tables_;
  const LanguageModel &lm_;
  const DecoderWeights &w_;
  const DecoderOptions &opt_;

  std::vector<Option> options_;
  std::vector<Token> oov_;
  // future_[i][j]: cheapest weighted estimate for covering [i, j).
  std::vector<std::vector<double>> future_;
  std::vector<Hyp> arena_;
  // Per stack: recombination key -> hypotheses (distinct surfaces, <= k).
  std::vector<std::unordered_map<std::string, std::vector<int>>> stacks_;
};

void Search::collect_options() {
  const std::size_t n = input_.size();
  const std::size_t max_len = std::max<std::size_t>(1, tables_.max_source_len());
  for (std::size_t i = 0; i < n; ++i) {
    bool has_single = false;
    for (std::size_t len = 1; len <= max_len && i + len <= n; ++len) {
      const Phrase span(input_.begin() + i, input_.begin() + i + len);
      for (auto &e : tables_.lookup(span)) {
        Option o;
        o.begin = i;
        o.end = i + len;
        for (const auto &t : e.target) o.ids.push_back(lm_.id(t));
        o.target = std::move(e.target);
        o.tm = -std::log10(e.weight);
        o.weight = e.weight;
        o.origin = e.origin;
        options_.push_back(std::move(o));
        if (len == 1) has_single = true;
      }
    }
    if (!has_single) {
      Option o;
      o.begin = i;
      o.end = i + 1;
      o.target = {input_[i]};
      o.ids = {lm_.id(input_[i])};
      o.tm = opt_.oov_penalty;
      o.weight = std::pow(10.0, -opt_.oov_penalty);
      o.copied = true;
      options_.push_back(std::move(o));
      oov_.push_back(input_[i]);
    }
  }
}

void Search::compute_future_costs() {
  const std::size_t n = input_.size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  future_.assign(n + 1, std::vector<double>(n + 1, kInf));
  for (const auto &o : options_) {
    // Context-free LM estimate of the target phrase.
    double lm = 0.0;
    for (std::size_t i = 0; i < o.ids.size(); ++i) {
      lm -= lm_.score(std::span<const WordId>(o.ids.data(), i), o.ids[i]);
    }
    const double est = w_.translation * o.tm + w_.lm * lm +
                       w_.word_penalty * static_cast<double>(o.target.size());
    future_[o.begin][o.end] = std::min(future_[o.begin][o.end], est);
  }
  for (std::size_t len = 2; len <= n; ++len) {
    for (std::size_t i = 0; i + len <= n; ++i) {
      const std::size_t j = i + len;
      for (std::size_t m = i + 1; m < j; ++m) {
        future_[i][j] = std::min(future_[i][j], future_[i][m] + future_[m][j]);
      }
    }
  }
}

double Search::future_for(std::uint64_t coverage) const {
  const std::size_t n = input_.size();
  double total = 0.0;
  std::size_t i = 0;
  while (i < n) {
    if (coverage >> i & 1u) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && !(coverage >> j & 1u)) ++j;
    total += future_[i][j];
    i = j;
  }
  return total;
}

void Search::add(std::size_t stack, Hyp hyp) {
  auto &group = stacks_[stack][recombination_key(hyp)];
  for (int &idx : group) {
    if (arena_[idx].surface == hyp.surface) {
      if (better(hyp, arena_[idx])) {
        arena_.push_back(std::move(hyp));
        idx = static_cast<int>(arena_.size() - 1);
      }
      return;
    }
  }
  if (group.size() < opt_.k) {
    arena_.push_back(std::move(hyp));
    group.push_back(static_cast<int>(arena_.size() - 1));
    return;
  }
  auto worst = std::max_element(group.begin(), group.end(), [this](int a, int b) {
    return better(arena_[a], arena_[b]);
  });
  if (better(hyp, arena_[*worst])) {
    arena_.push_back(std::move(hyp));
    *worst = static_cast<int>(arena_.size() - 1);
  }
}

KBestList Search::run() {
  const std::size_t n = input_.size();
  collect_options();
  compute_future_costs();

  stacks_.assign(n + 1, {});
  Hyp root;
  root.lm_state = {LanguageModel::kBos};
  root.future = future_for(0);
  add(0, std::move(root));

  const std::size_t context = lm_.order() > 1 ? lm_.order() - 1 : 0;
  const std::uint64_t full = n == 64 ? ~0ull : ((1ull << n) - 1);

  std::vector<int> final_hyps;
  for (std::size_t c = 0; c <= n; ++c) {
    std::vector<int> members;
    for (const auto &[key, group] : stacks_[c]) members.insert(members.end(), group.begin(), group.end());
    std::sort(members.begin(), members.end(), [this](int a, int b) {
      return translation_less(arena_[a].cost + arena_[a].future, arena_[a].surface,
                              arena_[b].cost + arena_[b].future, arena_[b].surface);
    });
    if (members.size() > opt_.beam_size) members.resize(opt_.beam_size);
    if (c == n) {
      final_hyps = std::move(members);
      break;
    }

    for (const int idx : members) {
      for (std::size_t oi = 0; oi < options_.size(); ++oi) {
        const Option &o = options_[oi];
        const Hyp &h = arena_[idx];
        const std::uint64_t span_bits = ((o.end - o.begin == 64) ? ~0ull
                                         : ((1ull << (o.end - o.begin)) - 1))
                                        << o.begin;
        if (h.coverage & span_bits) continue;
        const std::size_t jump = o.begin > h.last_end ? o.begin - h.last_end : h.last_end - o.begin;
        if (jump > opt_.max_jump) continue;

        Hyp next;
        next.coverage = h.coverage | span_bits;
        next.covered = h.covered + (o.end - o.begin);
        next.last_end = o.end;
        next.comp = h.comp;
        next.comp.tm += o.tm;
        next.comp.dist += static_cast<double>(jump);
        next.comp.wp += static_cast<double>(o.target.size());
        std::vector<WordId> state = h.lm_state;
        for (const WordId wid : o.ids) {
          next.comp.lm -= lm_.score(state, wid);
          state.push_back(wid);
        }
        if (next.coverage == full) next.comp.lm -= lm_.score(state, LanguageModel::kEos);
        if (state.size() > context) state.erase(state.begin(), state.end() - context);
        next.lm_state = std::move(state);
        next.cost = next.comp.weighted(w_);
        next.future = future_for(next.coverage);
        next.parent = idx;
        next.option = static_cast<int>(oi);
        next.surface = h.surface;
        for (const auto &t : o.target) {
          if (!next.surface.empty()) next.surface += ' ';
          next.surface += t;
        }
        add(next.covered, std::move(next));
      }
    }
  }

  // Distinct outputs, best first.
  std::map<std::string, int> best_by_surface;
  for (const int idx : final_hyps) {
    auto [it, inserted] = best_by_surface.emplace(arena_[idx].surface, idx);
    if (!inserted && better(arena_[idx], arena_[it->second])) it->second = idx;
  }
  std::vector<Translation> items;
  for (const auto &[surface, idx] : best_by_surface) {
    const Hyp &h = arena_[idx];
    Translation t;
    t.cost = h.cost;
    t.components = h.comp;
    for (int cur = idx; arena_[cur].parent >= 0; cur = arena_[cur].parent) {
      const Option &o = options_[arena_[cur].option];
      t.segmentation.push_back({o.begin, o.end, o.target, o.weight, o.origin, o.copied});
    }
    std::reverse(t.segmentation.begin(), t.segmentation.end());
    for (const auto &seg : t.segmentation) {
      t.tokens.insert(t.tokens.end(), seg.target.begin(), seg.target.end());
    }
    t.text = detokenize_consolidated(t.tokens);
    items.push_back(std::move(t));
  }
  std::sort(items.begin(), items.end(), [](const Translation &a, const Translation &b) {
    if (std::abs(a.cost - b.cost) > 1e-9) return a.cost < b.cost;
    if (a.text != b.text) return a.text < b.text;
    return a.tokens < b.tokens;
  });
  if (items.size() > opt_.k) items.resize(opt_.k);
  for (std::size_t i = 0; i < items.size(); ++i) items[i].rank = i + 1;

  KBestList out;
  out.items = std::move(items);
  out.oov = std::move(oov_);
  return out;
}

}  // namespace

Decoder::Decoder(const LookupSet &tables, const LanguageModel &lm, DecoderWeights weights,
                 DecoderOptions options)
    : tables_(tables), lm_(lm), weights_(weights), options_(options) {
  if (options_.k < 1) throw Error("decoder: k must be >= 1");
  if (options_.beam_size < 1) throw Error("decoder: beam size must be >= 1");
}

KBestList Decoder::translate(std::string_view input,
                             const std::vector<ConsolidationRule> *pre_rules) const {
  Phrase tokens = tokenize(input, JoinerPolicy::kAllowJoined);
  if (pre_rules) tokens = apply_rules(tokens, *pre_rules);
  return translate_tokens(tokens);
}

KBestList Decoder::translate_tokens(const Phrase &tokens) const {
  if (tokens.empty()) throw DataError("empty input");
  if (tokens.size() > kMaxInputTokens) {
    throw DataError("input longer than " + std::to_string(kMaxInputTokens) + " tokens");
  }
  return Search(tokens, tables_, lm_, weights_, options_).run();
}

KBestList translate(std::string_view input, const LookupSet &lookup, const LanguageModel &lm,
                    const DecoderWeights &weights, std::size_t k, std::size_t beam_size,
                    const std::vector<ConsolidationRule> *pre_rules) {
  DecoderOptions options;
  options.k = k;
  options.beam_size = beam_size;
  return Decoder(lookup, lm, weights, options).translate(input, pre_rules);
}

}  // namespace menumt
