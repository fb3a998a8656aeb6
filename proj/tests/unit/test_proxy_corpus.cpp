// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <set>

#include "cvaegen/proxy_corpus.hpp"

namespace cvaegen {
namespace {

ProxyCorpusOptions small_options() {
  ProxyCorpusOptions o;
  o.train_per_intent = 40;
  o.validate_per_intent = 5;
  o.reservoir_per_intent = 6;
  o.seed = 99;
  return o;
}

TEST(ProxyCorpus, SevenBenchmarkIntentsWithRequestedCounts) {
  const auto pc = make_proxy_corpus(small_options());
  EXPECT_EQ(pc.train.intents.size(), 7u);
  std::map<std::string, int> per;
  for (const auto& u : pc.train.utterances) ++per[u.intent];
  for (const auto& [i, n] : per) EXPECT_EQ(n, 40) << i;
  EXPECT_EQ(pc.validate.size(), 35u);
  EXPECT_EQ(pc.reservoir.size(), 6u * proxy_reservoir_grammars().size());
}

TEST(ProxyCorpus, ReservoirIntentsAreDisjointFromBenchmark) {
  const auto pc = make_proxy_corpus(small_options());
  for (const auto& i : pc.reservoir.intents) {
    EXPECT_FALSE(std::binary_search(pc.train.intents.begin(), pc.train.intents.end(), i)) << i;
  }
}

TEST(ProxyCorpus, Deterministic) {
  const auto a = make_proxy_corpus(small_options());
  const auto b = make_proxy_corpus(small_options());
  EXPECT_EQ(a.train.utterances, b.train.utterances);
  EXPECT_EQ(a.reservoir.utterances, b.reservoir.utterances);
}

TEST(ProxyCorpus, EveryTemplateExpandsToValidUtterances) {
  Rng rng(4);
  for (const auto* set : {&proxy_benchmark_grammars(), &proxy_reservoir_grammars()}) {
    for (const auto& g : *set) {
      for (int i = 0; i < 60; ++i) {
        const auto u = sample_utterance(g, proxy_slot_lexicon(), rng);
        EXPECT_NO_THROW(validate_utterance(u)) << g.intent;
        EXPECT_EQ(u.raw_text.find("  "), std::string::npos) << u.raw_text;
        EXPECT_EQ(u.raw_text.find('<'), std::string::npos) << u.raw_text;
        EXPECT_EQ(u.raw_text.find('{'), std::string::npos) << u.raw_text;
      }
    }
  }
}

TEST(ProxyCorpus, WrittenLayoutLoadsBack) {
  const auto dir = std::filesystem::temp_directory_path() / "cvaegen_proxy_layout";
  std::filesystem::remove_all(dir);
  const auto pc = make_proxy_corpus(small_options());
  write_proxy_corpus(pc, dir);
  EXPECT_TRUE(std::filesystem::exists(dir / "train" / "train_GetWeather_full.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "validate" / "validate_GetWeather.json"));
  const auto train = load_dataset(dir / "train");
  const auto res = load_dataset(dir / "reservoir");
  EXPECT_EQ(train.size(), pc.train.size());
  EXPECT_EQ(train.intents, pc.train.intents);
  EXPECT_EQ(res.size(), pc.reservoir.size());
  std::multiset<std::string> a, b;
  for (const auto& p : pc.train.patterns) a.insert(p.joined());
  for (const auto& p : train.patterns) b.insert(p.joined());
  EXPECT_EQ(a, b);
}

}  // namespace
}  // namespace cvaegen
