#include <benchmark/benchmark.h>

#include <random>

#include "bundles.h"
#include "decoder_oracle.h"
#include "menumt/alignment.h"
#include "menumt/binary_table.h"
#include "menumt/io.h"

namespace menumt {
namespace {

const std::string &sample_dir() {
  static testing::TempDir dir("bench-sample");
  static const BuildResult built = testing::build_sample(dir.path().string());
  (void)built;
  static const std::string path = dir.path().string();
  return path;
}

void BM_TranslateWarm(benchmark::State &state) {
  const auto a = Artifacts::load(sample_dir());
  for (auto _ : state) benchmark::DoNotOptimize(a->translate("arroz a la cubana"));
}
BENCHMARK(BM_TranslateWarm)->Unit(benchmark::kMicrosecond);

void BM_TranslateGold(benchmark::State &state) {
  const auto a = Artifacts::load(sample_dir());
  std::vector<std::string> inputs;
  for (const auto &p : read_corpus(testing::data_path("gold_sample.tsv")).pairs) {
    inputs.push_back(text::join(p.source));
  }
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(a->translate(inputs[i++ % inputs.size()]));
}
BENCHMARK(BM_TranslateGold)->Unit(benchmark::kMicrosecond);

void BM_ToyDecodeLength(benchmark::State &state) {
  const auto m = testing::toy_model();
  const Decoder d(m.tables, m.lm);
  const std::vector<Token> words = {"a", "b", "c", "d"};
  Phrase input;
  for (std::int64_t i = 0; i < state.range(0); ++i) input.push_back(words[i % words.size()]);
  for (auto _ : state) benchmark::DoNotOptimize(d.translate_tokens(input));
}
BENCHMARK(BM_ToyDecodeLength)->Arg(2)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMicrosecond);

void BM_LoadBundle(benchmark::State &state) {
  const LoadOptions opt{state.range(0) == 0 ? LoadMode::kOnDemand : LoadMode::kFullLoad, true};
  for (auto _ : state) benchmark::DoNotOptimize(Artifacts::load(sample_dir(), opt));
  state.SetLabel(state.range(0) == 0 ? "on-demand" : "full");
}
BENCHMARK(BM_LoadBundle)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_BinaryLookup(benchmark::State &state) {
  const auto table = PhraseTable::from_text(
      io::read_file(sample_dir() + "/trained.txt"), TableOrigin::kTrained);
  const auto handle = open_ondemand_file(sample_dir() + "/trained.bin");
  std::vector<Phrase> keys;
  for (const auto &[k, v] : table.entries()) keys.push_back(tokenize(k, JoinerPolicy::kAllowJoined));
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(handle->lookup(keys[i++ % keys.size()]));
}
BENCHMARK(BM_BinaryLookup);

void BM_InMemoryLookup(benchmark::State &state) {
  const auto table = PhraseTable::from_text(
      io::read_file(sample_dir() + "/trained.txt"), TableOrigin::kTrained);
  std::vector<Phrase> keys;
  for (const auto &[k, v] : table.entries()) keys.push_back(tokenize(k, JoinerPolicy::kAllowJoined));
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(table.lookup(keys[i++ % keys.size()]));
}
BENCHMARK(BM_InMemoryLookup);

void BM_TrainEm(benchmark::State &state) {
  const auto split = split_standardized(read_corpus(testing::data_path("sample_corpus.tsv")));
  for (auto _ : state) benchmark::DoNotOptimize(train_em(split.training, 10));
}
BENCHMARK(BM_TrainEm)->Unit(benchmark::kMillisecond);

void BM_BuildSample(benchmark::State &state) {
  for (auto _ : state) {
    testing::TempDir dir("bench-build");
    benchmark::DoNotOptimize(testing::build_sample(dir.path().string()));
  }
}
BENCHMARK(BM_BuildSample)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace menumt

BENCHMARK_MAIN();
