#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "menumt/binary_table.h"
#include "menumt/error.h"
#include "menumt/io.h"
#include "test_support.h"

namespace menumt {
namespace {

PositionIndices links(std::initializer_list<std::size_t> targets) {
  PositionIndices p;
  std::size_t i = 0;
  for (auto t : targets) p.links.push_back({i++, t, false});
  return p;
}

PhrasePair pp(std::string_view s, std::string_view t, bool std_flag = true) {
  return {tokenize(s), tokenize(t), std_flag, std_flag ? "general" : "drinks"};
}

std::set<std::pair<std::string, std::string>> as_set(const PhrasePairList &l) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto &[s, t] : l) out.emplace(text::join(s), text::join(t));
  return out;
}

// Enumerates every (source span, target span) pair and keeps the ones where
// the target span is exactly the hull of the span's links and the links
// inside the hull come only from the span.
std::set<std::pair<std::string, std::string>> oracle_extract(const PhrasePair &p,
                                                             const PositionIndices &a,
                                                             std::size_t max_n) {
  std::set<std::pair<std::string, std::string>> out;
  const auto &s = p.source;
  const auto &t = p.target;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i; j < s.size() && j - i < max_n; ++j) {
      for (std::size_t lo = 0; lo < t.size(); ++lo) {
        for (std::size_t hi = lo; hi < t.size(); ++hi) {
          bool ok = true, hit_lo = false, hit_hi = false;
          for (const auto &l : a.links) {
            const bool inside_src = l.source >= i && l.source <= j;
            const bool inside_tgt = l.target >= lo && l.target <= hi;
            if (inside_src != inside_tgt) ok = false;
            if (inside_src && l.target == lo) hit_lo = true;
            if (inside_src && l.target == hi) hit_hi = true;
          }
          if (ok && hit_lo && hit_hi) {
            out.emplace(text::join(Phrase(s.begin() + i, s.begin() + j + 1)),
                        text::join(Phrase(t.begin() + lo, t.begin() + hi + 1)));
          }
        }
      }
    }
  }
  return out;
}

TEST(ExtractPhrases, TortillaExample) {
  const auto got = as_set(extract_phrases(pp("tortilla de patatas", "potato omelette"), links({1, 0, 0})));
  EXPECT_TRUE(got.count({"tortilla", "omelette"}));
  EXPECT_TRUE(got.count({"tortilla de patatas", "potato omelette"}));
  EXPECT_TRUE(got.count({"de patatas", "potato"}));
  EXPECT_FALSE(got.count({"tortilla de", "potato omelette"}));
}

TEST(ExtractPhrases, SingleWordAndMonotonePair) {
  EXPECT_EQ(extract_phrases(pp("pan", "bread"), links({0})).size(), 1u);
  const auto two = as_set(extract_phrases(pp("pan tostado", "bread toasted"), links({0, 1})));
  EXPECT_EQ(two, (std::set<std::pair<std::string, std::string>>{
                     {"pan", "bread"}, {"tostado", "toasted"}, {"pan tostado", "bread toasted"}}));
}

TEST(ExtractPhrases, MaxNLimitsSpanLength) {
  const auto p = pp("a b c d", "w x y z");
  const auto l = links({0, 1, 2, 3});
  for (const auto &[s, t] : extract_phrases(p, l, 2)) EXPECT_LE(s.size(), 2u);
  EXPECT_EQ(extract_phrases(p, l, 1).size(), 4u);
  EXPECT_THROW(extract_phrases(p, l, 0), Error);
  EXPECT_THROW(extract_phrases(p, links({0, 1}), 3), DataError);
  EXPECT_THROW(extract_phrases(p, links({0, 1, 2, 9}), 3), DataError);
}

TEST(ExtractPhrases, MatchesBruteForceOnRandomAlignments) {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t sl = 1 + rng() % 6, tl = 1 + rng() % 6;
    PhrasePair p;
    for (std::size_t i = 0; i < sl; ++i) p.source.push_back("s" + std::to_string(i));
    for (std::size_t i = 0; i < tl; ++i) p.target.push_back("t" + std::to_string(i));
    PositionIndices a;
    for (std::size_t i = 0; i < sl; ++i) a.links.push_back({i, rng() % tl, false});
    const std::size_t max_n = 1 + rng() % 4;
    EXPECT_EQ(as_set(extract_phrases(p, a, max_n)), oracle_extract(p, a, max_n));
  }
}

TEST(ScoreTable, RelativeFrequency) {
  PhrasePairList ex;
  for (int i = 0; i < 4; ++i) ex.emplace_back(Phrase{"cortado"}, Phrase{"sour"});
  ex.emplace_back(Phrase{"cortado"}, Phrase{"espresso"});
  ex.emplace_back(Phrase{"del"}, Phrase{"of", "the"});
  const auto t = score_table(ex);
  const auto e = t.lookup({"cortado"});
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0].target, Phrase{"espresso"});
  EXPECT_DOUBLE_EQ(e[0].weight, 0.2);
  EXPECT_DOUBLE_EQ(e[1].weight, 0.8);
  EXPECT_DOUBLE_EQ(t.lookup({"del"}).at(0).weight, 1.0);
  EXPECT_TRUE(t.lookup({"nada"}).empty());
  EXPECT_THROW(score_table({}), DataError);
}

TEST(ScoreTable, PerSourceNormalization) {
  const auto c = read_corpus(testing::data_path("sample_corpus.tsv"));
  PhrasePairList ex;
  std::mt19937 rng(2);
  for (const auto &p : c.pairs) {
    PositionIndices a;
    for (std::size_t i = 0; i < p.source.size(); ++i) a.links.push_back({i, rng() % p.target.size(), false});
    const auto e = extract_phrases(p, a);
    ex.insert(ex.end(), e.begin(), e.end());
  }
  const auto t = score_table(ex);
  for (const auto &[src, opts] : t.entries()) {
    double sum = 0;
    for (const auto &o : opts) {
      EXPECT_GT(o.weight, 0.0);
      EXPECT_LE(o.weight, 1.0);
      sum += o.weight;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9) << src;
  }
}

TEST(PhraseTable, SetValidates) {
  PhraseTable t;
  EXPECT_THROW(t.set({}, {"x"}, 1.0), DataError);
  EXPECT_THROW(t.set({"a"}, {"x"}, 0.0), DataError);
  EXPECT_THROW(t.set({"a"}, {"x"}, 1.5), DataError);
  t.set({"a", "b"}, {"x"}, 0.5);
  t.set({"a", "b"}, {"x"}, 0.25);
  EXPECT_EQ(t.entry_count(), 1u);
  EXPECT_DOUBLE_EQ(t.lookup({"a", "b"})[0].weight, 0.25);
  EXPECT_EQ(t.max_source_len(), 2u);
}

TEST(OneToOne, UnitWeights) {
  const auto t = build_one_to_one({pp("café cortado", "espresso with milk", false),
                                   pp("café solo", "espresso", false),
                                   pp("café solo", "espresso", false)},
                                  "drinks");
  EXPECT_EQ(t.entry_count(), 2u);
  EXPECT_EQ(t.origin(), TableOrigin::kOneToOne);
  EXPECT_EQ(t.topic(), "drinks");
  for (const auto &e : t.all_entries()) EXPECT_EQ(e.weight, 1.0);
  EXPECT_EQ(build_one_to_one({}, "x").entry_count(), 0u);
}

TEST(OneToOne, ConflictsAndStandardizedRejected) {
  EXPECT_THROW(build_one_to_one({pp("café solo", "espresso", false), pp("café solo", "black coffee", false)},
                                "drinks"),
               DataError);
  EXPECT_THROW(build_one_to_one({pp("café solo", "espresso", true)}, "drinks"), DataError);
}

TEST(MergeTables, EntriesCoexistAndWeightsUnchanged) {
  auto trained = std::make_shared<PhraseTable>(TableOrigin::kTrained);
  trained->set({"cortado"}, {"sour"}, 1.0);
  trained->set({"café", "cortado"}, {"sour", "coffee"}, 1.0);
  auto drinks = std::make_shared<PhraseTable>(
      build_one_to_one({pp("café cortado", "espresso with milk", false)}, "drinks"));
  const auto set = merge_tables(trained, {drinks});
  const auto c = set.lookup({"cortado"});
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].origin, TableOrigin::kTrained);
  const auto cc = set.lookup({"café", "cortado"});
  ASSERT_EQ(cc.size(), 2u);
  EXPECT_EQ(cc[0].target, (Phrase{"sour", "coffee"}));
  EXPECT_EQ(cc[1].target, (Phrase{"espresso", "with", "milk"}));
  EXPECT_EQ(cc[1].weight, 1.0);
  EXPECT_EQ(set.max_source_len(), 2u);

  const auto alone = merge_tables(trained, {});
  for (const auto &[k, v] : trained->entries()) {
    EXPECT_EQ(alone.lookup(tokenize(k)), trained->lookup(tokenize(k)));
  }
}

TEST(PhraseTable, TextRoundTrip) {
  PhraseTable t(TableOrigin::kTrained);
  t.set({"a&la", "cubana"}, {"cuban", "style"}, 0.75);
  t.set({"a&la", "cubana"}, {"cuban"}, 0.25);
  t.set({"pan"}, {"bread"}, 1.0);
  const auto text = t.to_text();
  EXPECT_EQ(PhraseTable::from_text(text, TableOrigin::kTrained), t);
  EXPECT_THROW(PhraseTable::from_text("a ||| b\n", TableOrigin::kTrained), ParseError);
  EXPECT_THROW(PhraseTable::from_text("a ||| b ||| 2\n", TableOrigin::kTrained), ParseError);
}

PhraseTable random_table(std::mt19937 &rng, std::size_t entries, TableOrigin origin) {
  const std::vector<std::string> vocab = {"a", "la", "de", "pan", "café", "crème", "x&y", "ñu", "b"};
  PhraseTable t(origin, origin == TableOrigin::kOneToOne ? "topic" : "");
  std::uniform_real_distribution<double> w(0.001, 1.0);
  while (t.entry_count() < entries) {
    Phrase s, tg;
    for (std::size_t i = 0, n = 1 + rng() % 3; i < n; ++i) s.push_back(vocab[rng() % vocab.size()]);
    for (std::size_t i = 0, n = 1 + rng() % 4; i < n; ++i) tg.push_back(vocab[rng() % vocab.size()]);
    t.set(s, tg, origin == TableOrigin::kOneToOne ? 1.0 : w(rng));
  }
  return t;
}

TEST(BinaryTable, RoundTripEveryPhrase) {
  std::mt19937 rng(1);
  const auto t = random_table(rng, 1000, TableOrigin::kTrained);
  const auto h = open_ondemand(serialize_binary(t));
  EXPECT_EQ(h->source_count(), t.source_count());
  EXPECT_EQ(h->entry_count(), t.entry_count());
  EXPECT_EQ(h->max_source_len(), t.max_source_len());
  EXPECT_EQ(h->origin(), TableOrigin::kTrained);
  for (const auto &[k, v] : t.entries()) {
    const auto ph = tokenize(k, JoinerPolicy::kAllowJoined);
    EXPECT_EQ(h->lookup(ph), t.lookup(ph)) << k;
  }
  EXPECT_EQ(h->materialize(), t);
  EXPECT_EQ(serialize_binary(h->materialize()), serialize_binary(t));
}

TEST(BinaryTable, RandomQueriesMatchInMemory) {
  std::mt19937 rng(9);
  const auto t = random_table(rng, 1000, TableOrigin::kOneToOne);
  const auto h = open_ondemand(serialize_binary(t));
  EXPECT_EQ(h->topic(), "topic");
  const std::vector<std::string> vocab = {"a", "la", "de", "pan", "café", "crème", "x&y", "ñu", "b", "zz"};
  for (int q = 0; q < 2000; ++q) {
    Phrase s;
    for (std::size_t i = 0, n = 1 + rng() % 4; i < n; ++i) s.push_back(vocab[rng() % vocab.size()]);
    EXPECT_EQ(h->lookup(s), t.lookup(s));
  }
  EXPECT_TRUE(h->lookup({"nope"}).empty());
}

TEST(BinaryTable, EmptyTable) {
  const auto h = open_ondemand(serialize_binary(PhraseTable{}));
  EXPECT_EQ(h->source_count(), 0u);
  EXPECT_TRUE(h->lookup({"a"}).empty());
}

TEST(BinaryTable, CorruptionRejected) {
  PhraseTable t;
  t.set({"pan"}, {"bread"}, 1.0);
  const auto good = serialize_binary(t);
  ASSERT_EQ(std::string(good.begin(), good.begin() + 5), "MLPT1");

  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(open_ondemand(bad_magic), DataError);

  for (std::size_t i = 5; i < good.size(); ++i) {
    auto flipped = good;
    flipped[i] ^= 0x40;
    EXPECT_THROW(open_ondemand(flipped), DataError) << "byte " << i;
  }
  EXPECT_THROW(open_ondemand({good.begin(), good.begin() + 8}), DataError);
  EXPECT_THROW(open_ondemand({}), DataError);
}

TEST(BinaryTable, MappedFileMatchesBytes) {
  testing::TempDir dir;
  std::mt19937 rng(4);
  const auto t = random_table(rng, 200, TableOrigin::kTrained);
  const auto bytes = serialize_binary(t);
  const auto path = dir.path() / "t.bin";
  io::write_file(path.string(), std::string(bytes.begin(), bytes.end()));
  const auto h = open_ondemand_file(path.string());
  EXPECT_EQ(h->materialize(), t);
  EXPECT_THROW(open_ondemand_file((dir.path() / "missing.bin").string()), Error);
}

}  // namespace
}  // namespace menumt
