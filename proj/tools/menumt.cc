// menumt: command-line front end for building, querying and serving
// menu-translation bundles.

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>

#include "menumt/consolidation.h"
#include "menumt/corpus.h"
#include "menumt/error.h"
#include "menumt/io.h"
#include "menumt/menudb.h"
#include "menumt/pipeline.h"
#include "menumt/service.h"

namespace fs = std::filesystem;
using namespace menumt;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

HttpServer *g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

LoadMode parse_mode(const std::string &s) {
  if (s == "ondemand") return LoadMode::kOnDemand;
  if (s == "full") return LoadMode::kFullLoad;
  throw CLI::ValidationError("--mode", "expected ondemand or full");
}

std::vector<std::string> read_lines(std::istream &in) {
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    if (!text::trim(line).empty()) out.push_back(line);
  }
  return out;
}

void print_stats(const std::string &label, const NgramStats &s) {
  std::cout << label << ": " << s.line_count << " lines, " << s.word_count << " words";
  for (const auto &[n, count] : s.distinct_ngrams) std::cout << ", " << n << "-grams " << count;
  std::cout << "\n";
}

void print_kbest(const KBestList &kbest) {
  for (const auto &t : kbest.items) {
    std::printf("%zu\t%.6f\t%s\n", t.rank, t.cost, t.text.c_str());
  }
  if (!kbest.oov.empty()) std::cout << "oov: " << text::join(kbest.oov) << "\n";
}

struct ManifestFlags {
  std::string manifest;
  std::string corpus;
  std::vector<std::string> rules;
  std::optional<bool> auto_consolidate;
  std::optional<std::size_t> min_support, max_len, max_phrase_len, em_iterations, lm_order, k,
      beam_size, max_jump;
  std::optional<double> w_tm, w_lm, w_dist, w_wp;
  std::string output_dir;

  void attach(CLI::App *app) {
    app->add_option("--manifest", manifest, "BuildManifest JSON file")->check(CLI::ExistingFile);
    app->add_option("--corpus", corpus, "Corpus TSV");
    app->add_option("--rules", rules, "Rule files, in application order");
    app->add_flag("--auto,!--no-auto", auto_consolidate, "Automatic n-gram consolidation");
    app->add_option("--min-support", min_support);
    app->add_option("--max-len", max_len);
    app->add_option("--max-phrase-len", max_phrase_len);
    app->add_option("--em-iterations", em_iterations);
    app->add_option("--lm-order", lm_order);
    app->add_option("--k", k);
    app->add_option("--beam", beam_size);
    app->add_option("--max-jump", max_jump);
    app->add_option("--w-tm", w_tm);
    app->add_option("--w-lm", w_lm);
    app->add_option("--w-dist", w_dist);
    app->add_option("--w-wp", w_wp);
    app->add_option("--output-dir,-o", output_dir);
  }

  BuildManifest resolve() const {
    BuildManifest m = manifest.empty() ? BuildManifest{} : BuildManifest::load(manifest);
    if (!corpus.empty()) m.corpus = corpus;
    if (!rules.empty()) m.rule_files = rules;
    if (auto_consolidate) m.auto_consolidate = *auto_consolidate;
    if (min_support) m.min_support = *min_support;
    if (max_len) m.max_len = *max_len;
    if (max_phrase_len) m.max_phrase_len = *max_phrase_len;
    if (em_iterations) m.em_iterations = *em_iterations;
    if (lm_order) m.lm_order = *lm_order;
    if (k) m.k = *k;
    if (beam_size) m.beam_size = *beam_size;
    if (max_jump) m.max_jump = *max_jump;
    if (w_tm) m.weights.translation = *w_tm;
    if (w_lm) m.weights.lm = *w_lm;
    if (w_dist) m.weights.distortion = *w_dist;
    if (w_wp) m.weights.word_penalty = *w_wp;
    if (!output_dir.empty()) m.output_dir = output_dir;
    // Re-validate the merged result.
    return BuildManifest::from_json(m.to_json());
  }
};

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Offline menu translation engine"};
  app.require_subcommand(1);
  app.fallthrough();
  bool json = false;
  app.add_flag("--json", json, "Emit JSON instead of text");

  // stats
  auto *stats = app.add_subcommand("stats", "Corpus line, word and n-gram counts");
  std::string stats_corpus, stats_side = "source";
  std::size_t stats_nmax = 3;
  bool stats_joined = false;
  stats->add_option("corpus", stats_corpus)->required()->check(CLI::ExistingFile);
  stats->add_option("--side", stats_side)->check(CLI::IsMember({"source", "target"}));
  stats->add_option("--nmax", stats_nmax)->check(CLI::Range(1, 10));
  stats->add_flag("--consolidated", stats_joined, "Accept '&'-joined tokens");

  // consolidate
  auto *cons = app.add_subcommand("consolidate", "Apply manual and automatic consolidation");
  std::string cons_corpus, cons_out, cons_rules_out;
  std::vector<std::string> cons_rules;
  bool cons_auto = true;
  AutoConsolidationOptions cons_opts;
  cons->add_option("corpus", cons_corpus)->required()->check(CLI::ExistingFile);
  cons->add_option("--rules", cons_rules)->check(CLI::ExistingFile);
  cons->add_flag("--auto,!--no-auto", cons_auto);
  cons->add_option("--min-support", cons_opts.min_support);
  cons->add_option("--max-len", cons_opts.max_len);
  cons->add_option("--out,-o", cons_out, "Consolidated training corpus");
  cons->add_option("--rules-out", cons_rules_out, "Write the rules that were applied");

  // split
  auto *split = app.add_subcommand("split", "Divide a corpus into training and one-to-one sets");
  std::string split_corpus, split_dir;
  split->add_option("corpus", split_corpus)->required()->check(CLI::ExistingFile);
  split->add_option("--out-dir,-o", split_dir)->required();

  // train
  auto *train = app.add_subcommand("train", "Run the full build and write a bundle");
  ManifestFlags train_flags;
  train_flags.attach(train);

  // translate
  auto *tr = app.add_subcommand("translate", "Translate text with a bundle");
  std::string tr_bundle, tr_mode = "ondemand";
  std::size_t tr_k = 0;
  std::vector<std::string> tr_text;
  tr->add_option("--bundle,-b", tr_bundle)->required()->check(CLI::ExistingDirectory);
  tr->add_option("--k", tr_k);
  tr->add_option("--mode", tr_mode)->check(CLI::IsMember({"ondemand", "full"}));
  tr->add_option("text", tr_text, "Input words, joined into one input; reads stdin lines when absent");

  // evaluate
  auto *ev = app.add_subcommand("evaluate", "Exact-match accuracy against a gold set");
  std::string ev_bundle, ev_gold, ev_mode = "ondemand";
  std::size_t ev_k = 0, ev_threads = 1;
  bool ev_items = false;
  ev->add_option("--bundle,-b", ev_bundle)->required()->check(CLI::ExistingDirectory);
  ev->add_option("--gold,-g", ev_gold)->required()->check(CLI::ExistingFile);
  ev->add_option("--k", ev_k);
  ev->add_option("--threads", ev_threads);
  ev->add_option("--mode", ev_mode)->check(CLI::IsMember({"ondemand", "full"}));
  ev->add_flag("--items", ev_items, "Include per-item results");

  // bench
  auto *bn = app.add_subcommand("bench", "Time load, first and warm translations");
  std::string bn_bundle, bn_mode = "ondemand";
  std::vector<std::string> bn_inputs;
  std::size_t bn_reps = 10;
  bn->add_option("--bundle,-b", bn_bundle)->required()->check(CLI::ExistingDirectory);
  bn->add_option("--input,-i", bn_inputs)->required();
  bn->add_option("--repetitions,-n", bn_reps)->check(CLI::PositiveNumber);
  bn->add_option("--mode", bn_mode)->check(CLI::IsMember({"ondemand", "full"}));

  // db
  auto *db = app.add_subcommand("db", "Menu database");
  db->require_subcommand(1);
  std::string db_store;
  db->add_option("--store,-s", db_store, "SQLite file")->required();
  auto *db_import = db->add_subcommand("import", "Import a dish DSL file");
  std::string imp_dsl, imp_images, imp_conditions;
  db_import->add_option("dsl", imp_dsl)->required()->check(CLI::ExistingFile);
  db_import->add_option("--images", imp_images, "Image directory")->check(CLI::ExistingDirectory);
  db_import->add_option("--conditions", imp_conditions, "condition<TAB>ingredient file")
      ->check(CLI::ExistingFile);
  auto *db_query = db->add_subcommand("query", "Look up a dish or ingredient");
  std::string q_kind, q_name;
  db_query->add_option("kind", q_kind)->required()->check(CLI::IsMember({"dish", "ingredient"}));
  db_query->add_option("name", q_name)->required();
  auto *db_flag = db->add_subcommand("flag", "Flag a dish for a diet profile");
  std::string f_dish;
  std::optional<std::int64_t> f_profile;
  std::vector<std::string> f_conditions, f_ingredients;
  db_flag->add_option("dish", f_dish)->required();
  db_flag->add_option("--profile", f_profile, "Existing profile id");
  db_flag->add_option("--condition", f_conditions, "Create a profile with these conditions");
  db_flag->add_option("--ingredient", f_ingredients, "User-added flagged ingredients");

  // serve
  auto *sv = app.add_subcommand("serve", "HTTP service");
  ServiceConfig cfg;
  std::string sv_mode = "ondemand";
  sv->add_option("--bundle,-b", cfg.bundle_dir)->check(CLI::ExistingDirectory);
  sv->add_option("--store,-s", cfg.store_path);
  sv->add_option("--templates", cfg.dialog_templates)->check(CLI::ExistingFile);
  sv->add_option("--lexicon", cfg.lexicon)->check(CLI::ExistingFile);
  sv->add_option("--host", cfg.host);
  sv->add_option("--port,-p", cfg.port)->check(CLI::Range(0, 65535));
  sv->add_option("--k", cfg.k)->check(CLI::Range(1, 100));
  sv->add_option("--cors", cfg.cors_allowlist, "Allowed origins");
  sv->add_option("--mode", sv_mode)->check(CLI::IsMember({"ondemand", "full"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*stats) {
      const auto policy = stats_joined ? JoinerPolicy::kAllowJoined : JoinerPolicy::kReject;
      const auto s = corpus_stats(read_corpus(stats_corpus, policy), side_from_string(stats_side),
                                  stats_nmax);
      if (json) {
        std::cout << s.to_json().dump(2) << "\n";
      } else {
        print_stats(stats_side, s);
      }
    } else if (*cons) {
      const auto corpus = read_corpus(cons_corpus);
      const auto split_sets = split_standardized(corpus);
      std::vector<ConsolidationRule> rules;
      for (const auto &f : cons_rules) {
        const auto r = read_rules(f);
        rules.insert(rules.end(), r.begin(), r.end());
      }
      auto source_rules = rules_for_side(rules, Side::kSource);
      const auto target_rules = rules_for_side(rules, Side::kTarget);
      if (cons_auto) {
        for (auto &r : auto_consolidate(mark_for_consolidation(split_sets.training), cons_opts)) {
          source_rules.push_back(std::move(r));
        }
      }
      const auto out = consolidate_corpus(split_sets, source_rules, target_rules);
      const auto before = corpus_stats(split_sets.training, Side::kSource);
      const auto after = corpus_stats(out.training, Side::kSource);
      if (!cons_out.empty()) write_corpus(cons_out, out.training);
      if (!cons_rules_out.empty()) {
        auto all = source_rules;
        all.insert(all.end(), target_rules.begin(), target_rules.end());
        io::write_file(cons_rules_out, serialize_rules(all));
      }
      if (json) {
        std::cout << nlohmann::json{{"before", before.to_json()},
                                    {"after", after.to_json()},
                                    {"rules", source_rules.size() + target_rules.size()}}
                         .dump(2)
                  << "\n";
      } else {
        print_stats("before", before);
        print_stats("after ", after);
        std::cout << "rules applied: " << source_rules.size() + target_rules.size() << "\n";
      }
    } else if (*split) {
      const auto s = split_standardized(read_corpus(split_corpus));
      fs::create_directories(split_dir);
      write_corpus((fs::path(split_dir) / "training.tsv").string(), s.training);
      for (const auto &[topic, pairs] : s.one_to_one) {
        ParallelCorpus c;
        c.pairs = pairs;
        write_corpus((fs::path(split_dir) / ("one_to_one." + topic + ".tsv")).string(), c);
      }
      std::cout << "training: " << s.training.size() << " pairs\n";
      for (const auto &[topic, pairs] : s.one_to_one) {
        std::cout << "one-to-one " << topic << ": " << pairs.size() << " pairs\n";
      }
    } else if (*train) {
      const auto result = build(train_flags.resolve());
      if (json) {
        std::cout << result.to_json().dump(2) << "\n";
      } else {
        print_stats("source before", result.stats_before);
        print_stats("source after ", result.stats_after);
        std::cout << "trained table: " << result.trained_entries << " entries over "
                  << result.trained_sources << " source phrases\n";
        for (const auto &[topic, n] : result.one_to_one_entries) {
          std::cout << "one-to-one " << topic << ": " << n << " entries\n";
        }
        std::cout << "bundle written to " << result.output_dir << "\n";
      }
    } else if (*tr) {
      const auto artifacts = Artifacts::load(tr_bundle, {parse_mode(tr_mode), true});
      // Positional words form one input; stdin gives one input per line.
      tr_text = tr_text.empty() ? read_lines(std::cin)
                                : std::vector<std::string>{text::join(tr_text)};
      nlohmann::json all = nlohmann::json::array();
      for (const auto &input : tr_text) {
        const auto kbest = artifacts->translate(input, tr_k);
        if (json) {
          all.push_back({{"input", input}, {"kbest", kbest.to_json()}, {"oov", kbest.oov}});
        } else {
          if (tr_text.size() > 1) std::cout << "# " << input << "\n";
          print_kbest(kbest);
        }
      }
      if (json) std::cout << all.dump(2) << "\n";
    } else if (*ev) {
      const auto artifacts = Artifacts::load(ev_bundle, {parse_mode(ev_mode), true});
      const auto report = evaluate(*artifacts, read_corpus(ev_gold), ev_k, ev_threads);
      if (json) {
        std::cout << report.to_json(ev_items).dump(2) << "\n";
      } else {
        std::printf("gold entries: %zu\n", report.gold_size);
        for (std::size_t n = 1; n <= report.k; ++n) {
          std::printf("top-%zu accuracy: %.2f%%\n", n, report.accuracy_at(n));
        }
        std::printf("mean translation time: %.3f ms\n", report.mean_translate_ms);
      }
    } else if (*bn) {
      const auto report = bench(bn_bundle, bn_inputs, bn_reps, {parse_mode(bn_mode), true});
      if (json) {
        std::cout << report.to_json().dump(2) << "\n";
      } else {
        auto line = [](const char *name, const PhaseTiming &p) {
          std::printf("%-6s mean %.3f ms  max %.3f ms  (%zu samples)\n", name, p.mean_ms, p.max_ms,
                      p.samples);
        };
        line("load", report.load);
        line("first", report.first);
        line("warm", report.warm);
      }
    } else if (*db) {
      Store store(db_store);
      if (*db_import) {
        const auto records = parse_dsl(io::read_file(imp_dsl));
        store.import(records, imp_images.empty() ? ImageLoader{} : directory_image_loader(imp_images));
        if (!imp_conditions.empty()) store.import_conditions(io::read_file(imp_conditions));
        const auto sizes = store.relation_sizes();
        if (json) {
          std::cout << nlohmann::json(sizes).dump(2) << "\n";
        } else {
          std::cout << "imported " << records.size() << " dishes\n";
          for (const auto &[rel, n] : sizes) std::cout << "  " << rel << ": " << n << "\n";
        }
      } else if (*db_query) {
        const auto j = q_kind == "dish" ? lookup_dish(store, q_name).to_json()
                                        : lookup_ingredient(store, q_name).to_json();
        std::cout << j.dump(2) << "\n";
      } else if (*db_flag) {
        const Dish dish = lookup_dish(store, f_dish);
        DietProfile profile;
        if (f_profile) {
          auto p = store.profile(*f_profile);
          if (!p) throw DataError("unknown profile " + std::to_string(*f_profile));
          profile = *p;
        } else {
          profile = set_profile(store, f_conditions, f_ingredients);
        }
        nlohmann::json flagged = nlohmann::json::array();
        for (const auto &f : flag_dish(store, dish, profile)) flagged.push_back(f.to_json());
        std::cout << nlohmann::json{{"dish", dish.name}, {"profile", profile.id}, {"flagged", flagged}}
                         .dump(2)
                  << "\n";
      }
    } else if (*sv) {
      cfg.mode = parse_mode(sv_mode);
      const auto service = make_service(cfg);
      HttpServer server(*service);
      const int port = server.bind(cfg.host, cfg.port);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on http://" << cfg.host << ":" << port << "\n";
      server.listen();
      g_server = nullptr;
    }
  } catch (const CLI::ValidationError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
