#include "menumt/pipeline.h"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <filesystem>
#include <functional>
#include <mutex>
#include <set>
#include <thread>

#include "menumt/alignment.h"
#include "menumt/binary_table.h"
#include "menumt/io.h"

namespace menumt {

namespace fs = std::filesystem;

namespace {

constexpr const char *kFormat = "menumt-bundle-1";

const std::set<std::string> kManifestKeys = {
    "corpus",         "rule_files", "auto_consolidate", "min_support", "max_len",
    "max_phrase_len", "em_iterations", "lm_order",      "k",           "beam_size",
    "max_jump",       "weights",    "output_dir"};

std::string resolve(const std::string &path, const std::string &base) {
  if (path.empty() || base.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base) / path).lexically_normal().string();
}

template <typename F>
auto stage(const char *name, F &&fn) {
  try {
    return fn();
  } catch (const StageError &) {
    throw;
  } catch (const Error &e) {
    throw StageError(name, e.what());
  }
}

bool valid_topic(const std::string &topic) {
  return !topic.empty() && std::all_of(topic.begin(), topic.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
  });
}

std::string trained_name(std::string_view ext) { return "trained." + std::string(ext); }
std::string one_to_one_name(const std::string &topic, std::string_view ext) {
  return "one_to_one." + topic + "." + std::string(ext);
}

std::string_view as_chars(std::span<const std::uint8_t> bytes) {
  return {reinterpret_cast<const char *>(bytes.data()), bytes.size()};
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

nlohmann::json BuildManifest::to_json() const {
  return {{"corpus", corpus},
          {"rule_files", rule_files},
          {"auto_consolidate", auto_consolidate},
          {"min_support", min_support},
          {"max_len", max_len},
          {"max_phrase_len", max_phrase_len},
          {"em_iterations", em_iterations},
          {"lm_order", lm_order},
          {"k", k},
          {"beam_size", beam_size},
          {"max_jump", max_jump},
          {"weights", weights.to_json()},
          {"output_dir", output_dir}};
}

BuildManifest BuildManifest::from_json(const nlohmann::json &j, const std::string &base_dir) {
  if (!j.is_object()) throw DataError("manifest must be a JSON object");
  for (const auto &[key, value] : j.items()) {
    if (!kManifestKeys.count(key)) throw DataError("unknown manifest key \"" + key + "\"");
  }
  BuildManifest m;
  try {
    m.corpus = resolve(j.value("corpus", m.corpus), base_dir);
    for (const auto &f : j.value("rule_files", std::vector<std::string>{})) {
      m.rule_files.push_back(resolve(f, base_dir));
    }
    m.auto_consolidate = j.value("auto_consolidate", m.auto_consolidate);
    m.min_support = j.value("min_support", m.min_support);
    m.max_len = j.value("max_len", m.max_len);
    m.max_phrase_len = j.value("max_phrase_len", m.max_phrase_len);
    m.em_iterations = j.value("em_iterations", m.em_iterations);
    m.lm_order = j.value("lm_order", m.lm_order);
    m.k = j.value("k", m.k);
    m.beam_size = j.value("beam_size", m.beam_size);
    m.max_jump = j.value("max_jump", m.max_jump);
    if (j.contains("weights")) m.weights = DecoderWeights::from_json(j.at("weights"));
    m.output_dir = resolve(j.value("output_dir", m.output_dir), base_dir);
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("manifest: ") + e.what());
  }
  if (m.corpus.empty()) throw DataError("manifest: corpus is required");
  if (m.output_dir.empty()) throw DataError("manifest: output_dir is required");
  if (m.min_support < 1 || m.max_len < 2) throw DataError("manifest: bad consolidation options");
  if (m.max_phrase_len < 1 || m.lm_order < 1 || m.k < 1 || m.beam_size < 1) {
    throw DataError("manifest: max_phrase_len, lm_order, k and beam_size must be >= 1");
  }
  return m;
}

BuildManifest BuildManifest::load(const std::string &path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::parse_error &e) {
    throw ParseError(path + ": " + e.what());
  }
  return from_json(j, fs::path(path).parent_path().string());
}

nlohmann::json BuildResult::to_json() const {
  nlohmann::json one = nlohmann::json::object();
  for (const auto &[topic, n] : one_to_one_entries) one[topic] = n;
  const auto words_before = static_cast<double>(stats_before.word_count);
  const double reduction =
      words_before > 0 ? 100.0 * (words_before - static_cast<double>(stats_after.word_count)) /
                             words_before
                       : 0.0;
  return {{"output_dir", output_dir},
          {"stats_before", stats_before.to_json()},
          {"stats_after", stats_after.to_json()},
          {"word_reduction_percent", reduction},
          {"rules", {{"source", source_rules.size()},
                     {"target", target_rules.size()},
                     {"auto", auto_rules.size()}}},
          {"trained", {{"sources", trained_sources}, {"entries", trained_entries}}},
          {"one_to_one", one},
          {"hashes", hashes}};
}

BuildResult build(const BuildManifest &manifest) {
  BuildResult result;
  result.output_dir = manifest.output_dir;

  const ParallelCorpus corpus = stage("read", [&] { return read_corpus(manifest.corpus); });
  if (corpus.empty()) throw StageError("read", "corpus is empty");

  const CorporaSplit split = stage("split", [&] {
    auto s = split_standardized(corpus);
    if (s.training.empty()) throw DataError("no standardized pairs to train on");
    for (const auto &[topic, pairs] : s.one_to_one) {
      if (!valid_topic(topic)) throw DataError("topic \"" + topic + "\" is not [A-Za-z0-9_-]+");
    }
    return s;
  });
  result.stats_before = corpus_stats(split.training, Side::kSource);

  const CorporaSplit consolidated = stage("consolidate", [&] {
    std::vector<ConsolidationRule> manual;
    for (const auto &f : manifest.rule_files) {
      const auto rules = read_rules(f);
      manual.insert(manual.end(), rules.begin(), rules.end());
    }
    result.source_rules = rules_for_side(manual, Side::kSource);
    result.target_rules = rules_for_side(manual, Side::kTarget);
    if (manifest.auto_consolidate) {
      result.auto_rules = auto_consolidate(mark_for_consolidation(split.training),
                                           {manifest.min_support, manifest.max_len});
      for (const auto &r : result.auto_rules) {
        const bool known = std::any_of(result.source_rules.begin(), result.source_rules.end(),
                                       [&](const auto &m) { return m.pattern == r.pattern; });
        if (!known) result.source_rules.push_back(r);
      }
    }
    for (std::size_t i = 0; i < result.source_rules.size(); ++i) {
      result.source_rules[i].order_index = i;
    }
    for (std::size_t i = 0; i < result.target_rules.size(); ++i) {
      result.target_rules[i].order_index = i;
    }
    return consolidate_corpus(split, result.source_rules, result.target_rules);
  });
  result.stats_after = corpus_stats(consolidated.training, Side::kSource);

  const AlignmentModel alignment =
      stage("align", [&] { return train_em(consolidated.training, manifest.em_iterations); });

  const PhraseTable trained = stage("extract", [&] {
    PhrasePairList extracted;
    for (const auto &pair : consolidated.training.pairs) {
      auto phrases = extract_phrases(pair, viterbi_align(alignment, pair), manifest.max_phrase_len);
      extracted.insert(extracted.end(), std::make_move_iterator(phrases.begin()),
                       std::make_move_iterator(phrases.end()));
    }
    return score_table(extracted);
  });
  result.trained_sources = trained.source_count();
  result.trained_entries = trained.entry_count();

  // One-to-one keys get the source rules too so that they match rewritten
  // decoder input.
  const std::map<std::string, PhraseTable> one_to_one = stage("one-to-one", [&] {
    std::map<std::string, PhraseTable> tables;
    for (const auto &[topic, pairs] : consolidated.one_to_one) {
      std::vector<PhrasePair> keyed = pairs;
      for (auto &p : keyed) p.source = apply_rules(p.source, result.source_rules);
      tables.emplace(topic, build_one_to_one(keyed, topic));
    }
    return tables;
  });
  for (const auto &[topic, table] : one_to_one) result.one_to_one_entries[topic] = table.entry_count();

  const LanguageModel lm = stage("lm", [&] {
    std::vector<Phrase> sentences;
    for (const auto &p : consolidated.training.pairs) sentences.push_back(p.target);
    for (const auto &[topic, pairs] : consolidated.one_to_one) {
      for (const auto &p : pairs) sentences.push_back(p.target);
    }
    return train_lm(sentences, manifest.lm_order);
  });

  stage("write", [&] {
    fs::create_directories(manifest.output_dir);
    auto put = [&](const std::string &name, std::string_view bytes) {
      io::write_file((fs::path(manifest.output_dir) / name).string(), bytes);
      result.hashes[name] = io::sha256_hex(bytes);
    };
    put("training.tsv", serialize_corpus(consolidated.training));
    put("rules.tsv", serialize_rules([&] {
          auto all = result.source_rules;
          all.insert(all.end(), result.target_rules.begin(), result.target_rules.end());
          return all;
        }()));
    put("auto_rules.tsv", serialize_rules(result.auto_rules));
    put("alignment.tsv", alignment.serialize());
    put(trained_name("txt"), trained.to_text());
    put(trained_name("bin"), as_chars(serialize_binary(trained)));
    nlohmann::json topics = nlohmann::json::array();
    for (const auto &[topic, table] : one_to_one) {
      put(one_to_one_name(topic, "txt"), table.to_text());
      put(one_to_one_name(topic, "bin"), as_chars(serialize_binary(table)));
      topics.push_back(topic);
    }
    put("lm.arpa", lm.to_arpa());

    nlohmann::json bundle = {
        {"format", kFormat},
        {"manifest", manifest.to_json()},
        {"one_to_one_topics", topics},
        {"decoder",
         {{"k", manifest.k},
          {"beam_size", manifest.beam_size},
          {"max_jump", manifest.max_jump},
          {"weights", manifest.weights.to_json()}}},
        {"files", result.hashes}};
    io::write_file((fs::path(manifest.output_dir) / kBundleFile).string(), bundle.dump(2) + "\n");
    return 0;
  });
  return result;
}

std::shared_ptr<const Artifacts> Artifacts::load(const std::string &dir, LoadOptions options) {
  std::shared_ptr<Artifacts> a(new Artifacts());
  a->mode_ = options.mode;
  const fs::path root(dir);
  try {
    a->bundle_ = nlohmann::json::parse(io::read_file((root / kBundleFile).string()));
  } catch (const nlohmann::json::parse_error &e) {
    throw DataError(std::string("bundle.json: ") + e.what());
  }
  if (a->bundle_.value("format", "") != kFormat) throw DataError("unsupported bundle format");

  const auto &files = a->bundle_.at("files");
  auto checked = [&](const std::string &name, std::string_view bytes) {
    if (!options.verify_hashes) return;
    if (!files.contains(name)) throw DataError("bundle does not list " + name);
    if (files.at(name).get<std::string>() != io::sha256_hex(bytes)) {
      throw DataError("checksum mismatch for " + name);
    }
  };
  auto read_checked = [&](const std::string &name) {
    std::string bytes = io::read_file((root / name).string());
    checked(name, bytes);
    return bytes;
  };

  try {
    const auto &dec = a->bundle_.at("decoder");
    a->weights_ = DecoderWeights::from_json(dec.at("weights"));
    a->options_.k = dec.at("k").get<std::size_t>();
    a->options_.beam_size = dec.at("beam_size").get<std::size_t>();
    a->options_.max_jump = dec.at("max_jump").get<std::size_t>();
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("bundle.json: ") + e.what());
  }

  a->source_rules_ = rules_for_side(parse_rules(read_checked("rules.tsv")), Side::kSource);
  a->lm_ = LanguageModel::from_arpa(read_checked("lm.arpa"));

  // Binary tables are validated by their embedded CRC when opened, which
  // keeps on-demand loading to one pass over each file.
  auto open = [&](const std::string &stem_txt, const std::string &stem_bin, TableOrigin origin,
                  const std::string &topic) -> std::shared_ptr<const PhraseSource> {
    if (options.mode == LoadMode::kOnDemand) {
      return open_ondemand_file((root / stem_bin).string());
    }
    return std::make_shared<PhraseTable>(
        PhraseTable::from_text(read_checked(stem_txt), origin, topic));
  };
  a->tables_.add(open(trained_name("txt"), trained_name("bin"), TableOrigin::kTrained, ""));
  for (const auto &topic : a->bundle_.at("one_to_one_topics")) {
    const auto t = topic.get<std::string>();
    a->tables_.add(open(one_to_one_name(t, "txt"), one_to_one_name(t, "bin"),
                        TableOrigin::kOneToOne, t));
  }
  return a;
}

KBestList Artifacts::translate(std::string_view text, std::size_t k) const {
  DecoderOptions opts = options_;
  if (k != 0) opts.k = k;
  return Decoder(tables_, lm_, weights_, opts).translate(text, &source_rules_);
}

std::string normalize_for_match(std::string_view text) {
  return detokenize_consolidated(tokenize(text, JoinerPolicy::kAllowJoined));
}

double EvalReport::accuracy_at(std::size_t n) const {
  if (gold_size == 0 || n == 0 || hits_at.empty()) return 0.0;
  const std::size_t i = std::min(n, hits_at.size()) - 1;
  return 100.0 * static_cast<double>(hits_at[i]) / static_cast<double>(gold_size);
}

double EvalReport::top1_accuracy() const { return accuracy_at(1); }
double EvalReport::topk_accuracy() const { return accuracy_at(k); }

nlohmann::json EvalReport::to_json(bool with_items) const {
  nlohmann::json at = nlohmann::json::array();
  for (std::size_t n = 1; n <= hits_at.size(); ++n) at.push_back(accuracy_at(n));
  nlohmann::json out = {{"gold_size", gold_size},
                        {"k", k},
                        {"top1_accuracy", top1_accuracy()},
                        {"topk_accuracy", topk_accuracy()},
                        {"accuracy_at", at},
                        {"mean_translate_ms", mean_translate_ms}};
  if (with_items) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto &it : items) {
      arr.push_back({{"source", it.source},
                     {"reference", it.reference},
                     {"outputs", it.outputs},
                     {"match_rank", it.match_rank}});
    }
    out["items"] = arr;
  }
  return out;
}

EvalReport evaluate(const Artifacts &artifacts, const ParallelCorpus &gold, std::size_t k,
                    std::size_t threads) {
  if (gold.empty()) throw DataError("gold set is empty");
  EvalReport report;
  report.gold_size = gold.size();
  report.k = k == 0 ? artifacts.options().k : k;
  report.items.resize(gold.size());
  std::vector<double> elapsed(gold.size(), 0.0);

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t i = next++; i < gold.size(); i = next++) {
      try {
        auto &item = report.items[i];
        item.source = text::join(gold.pairs[i].source);
        item.reference = text::join(gold.pairs[i].target);
        const auto t0 = std::chrono::steady_clock::now();
        const KBestList kbest = artifacts.translate(item.source, report.k);
        elapsed[i] = ms_since(t0);
        const std::string want = normalize_for_match(item.reference);
        for (const auto &t : kbest.items) {
          item.outputs.push_back(t.text);
          if (item.match_rank == 0 && normalize_for_match(t.text) == want) {
            item.match_rank = item.outputs.size();
          }
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, gold.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto &t : pool) t.join();
  if (error) std::rethrow_exception(error);

  report.hits_at.assign(report.k, 0);
  for (const auto &item : report.items) {
    if (item.match_rank == 0) continue;
    for (std::size_t n = item.match_rank; n <= report.k; ++n) ++report.hits_at[n - 1];
  }
  double total = 0.0;
  for (double e : elapsed) total += e;
  report.mean_translate_ms = total / static_cast<double>(gold.size());
  return report;
}

nlohmann::json BenchReport::to_json() const {
  auto phase = [](const PhaseTiming &p) {
    return nlohmann::json{{"mean_ms", p.mean_ms}, {"max_ms", p.max_ms}, {"samples", p.samples}};
  };
  return {{"repetitions", repetitions},
          {"load", phase(load)},
          {"first", phase(first)},
          {"warm", phase(warm)}};
}

BenchReport bench(const std::string &dir, const std::vector<std::string> &inputs,
                  std::size_t repetitions, LoadOptions options) {
  if (repetitions < 1) throw DataError("repetitions must be >= 1");
  if (inputs.empty()) throw DataError("bench needs at least one input");
  BenchReport report;
  report.repetitions = repetitions;
  auto record = [](PhaseTiming &p, double ms) {
    p.mean_ms += ms;
    p.max_ms = std::max(p.max_ms, ms);
    ++p.samples;
  };
  for (std::size_t r = 0; r < repetitions; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    const auto artifacts = Artifacts::load(dir, options);
    record(report.load, ms_since(t0));

    t0 = std::chrono::steady_clock::now();
    artifacts->translate(inputs.front());
    record(report.first, ms_since(t0));

    for (const auto &input : inputs) {
      t0 = std::chrono::steady_clock::now();
      artifacts->translate(input);
      record(report.warm, ms_since(t0));
    }
  }
  for (PhaseTiming *p : {&report.load, &report.first, &report.warm}) {
    p->mean_ms /= static_cast<double>(p->samples);
  }
  return report;
}

}  // namespace menumt
