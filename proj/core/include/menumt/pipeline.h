#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "menumt/consolidation.h"
#include "menumt/corpus.h"
#include "menumt/decoder.h"
#include "menumt/error.h"
#include "menumt/language_model.h"
#include "menumt/phrase_table.h"

namespace menumt {

// Build configuration. Relative paths in a manifest file resolve against
// the file's directory.
struct BuildManifest {
  std::string corpus;
  // Rule files in application order; each line carries its side.
  std::vector<std::string> rule_files;
  bool auto_consolidate = true;
  std::size_t min_support = 2;
  std::size_t max_len = 4;
  std::size_t max_phrase_len = 3;
  std::size_t em_iterations = 10;
  std::size_t lm_order = 3;
  std::size_t k = 5;
  std::size_t beam_size = 50;
  std::size_t max_jump = 3;
  DecoderWeights weights;
  std::string output_dir = "build/artifacts";

  nlohmann::json to_json() const;
  static BuildManifest from_json(const nlohmann::json &j, const std::string &base_dir = {});
  static BuildManifest load(const std::string &path);
};

// Failure inside a build stage; the message starts with the stage name.
class StageError : public DataError {
 public:
  StageError(std::string stage, const std::string &what)
      : DataError(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string &stage() const { return stage_; }

 private:
  std::string stage_;
};

inline constexpr std::string_view kBundleFile = "bundle.json";

struct BuildResult {
  std::string output_dir;
  NgramStats stats_before;  // training source side, raw
  NgramStats stats_after;   // training source side, consolidated
  std::vector<ConsolidationRule> source_rules;
  std::vector<ConsolidationRule> target_rules;
  std::vector<ConsolidationRule> auto_rules;
  std::size_t trained_sources = 0;
  std::size_t trained_entries = 0;
  std::map<std::string, std::size_t> one_to_one_entries;  // topic -> entries
  // Artifact file name -> SHA-256, as recorded in bundle.json.
  std::map<std::string, std::string> hashes;

  nlohmann::json to_json() const;
};

// Split, consolidate, align, extract, score, train the LM and write every
// artifact plus bundle.json into manifest.output_dir. Identical inputs give
// byte-identical outputs.
BuildResult build(const BuildManifest &manifest);

enum class LoadMode { kOnDemand, kFullLoad };

struct LoadOptions {
  LoadMode mode = LoadMode::kOnDemand;
  // Check SHA-256 of every file read against bundle.json.
  bool verify_hashes = true;
};

// A loaded, immutable bundle. Safe to share between threads.
class Artifacts {
 public:
  // On-demand mode memory-maps the binary tables; full-load mode parses the
  // text tables into memory.
  static std::shared_ptr<const Artifacts> load(const std::string &dir, LoadOptions options = {});

  // Applies the bundle's source rules, then decodes. k == 0 uses the
  // bundle default.
  KBestList translate(std::string_view text, std::size_t k = 0) const;

  const LookupSet &tables() const { return tables_; }
  const LanguageModel &lm() const { return lm_; }
  const std::vector<ConsolidationRule> &source_rules() const { return source_rules_; }
  const DecoderWeights &weights() const { return weights_; }
  const DecoderOptions &options() const { return options_; }
  LoadMode mode() const { return mode_; }
  const nlohmann::json &bundle() const { return bundle_; }

 private:
  Artifacts() = default;

  LookupSet tables_;
  LanguageModel lm_;
  std::vector<ConsolidationRule> source_rules_;
  DecoderWeights weights_;
  DecoderOptions options_;
  LoadMode mode_ = LoadMode::kOnDemand;
  nlohmann::json bundle_;
};

// Lowercased, tokenized, joiners expanded: the form compared by evaluate.
std::string normalize_for_match(std::string_view text);

struct EvalItem {
  std::string source;
  std::string reference;
  std::vector<std::string> outputs;  // k-best texts
  // 1-based rank of the first exact match, 0 if none.
  std::size_t match_rank = 0;
};

struct EvalReport {
  std::size_t gold_size = 0;
  std::size_t k = 0;
  // hits_at[i] = items whose reference is within the top i+1 outputs.
  std::vector<std::size_t> hits_at;
  double mean_translate_ms = 0.0;
  std::vector<EvalItem> items;

  double top1_accuracy() const;  // percent
  double topk_accuracy() const;  // percent, at k
  double accuracy_at(std::size_t n) const;
  nlohmann::json to_json(bool with_items = false) const;
};

// Exact match after normalization. Gold entries are decoded on `threads`
// workers (0 picks the hardware concurrency). Throws DataError on an empty
// gold set.
EvalReport evaluate(const Artifacts &artifacts, const ParallelCorpus &gold, std::size_t k = 0,
                    std::size_t threads = 1);

struct PhaseTiming {
  double mean_ms = 0.0;
  double max_ms = 0.0;
  std::size_t samples = 0;
};

struct BenchReport {
  std::size_t repetitions = 0;
  PhaseTiming load;
  PhaseTiming first;
  PhaseTiming warm;

  nlohmann::json to_json() const;
};

// Per repetition: load the bundle, translate inputs[0] once (first), then
// every input once more (warm). Requires repetitions >= 1 and inputs.
BenchReport bench(const std::string &dir, const std::vector<std::string> &inputs,
                  std::size_t repetitions, LoadOptions options = {});

}  // namespace menumt
