// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cvaegen/metrics.hpp"
#include "oracles/bleu_bruteforce.hpp"

namespace cvaegen {
namespace {

Pattern P(std::initializer_list<const char*> toks) {
  Pattern p;
  for (auto t : toks) p.tokens.emplace_back(t);
  return p;
}

Pattern random_pattern(Rng& r, int max_len, int vocab) {
  Pattern p;
  const int len = 1 + static_cast<int>(r.below(static_cast<std::uint64_t>(max_len)));
  for (int i = 0; i < len; ++i) p.tokens.push_back("w" + std::to_string(r.below(static_cast<std::uint64_t>(vocab))));
  return p;
}

TEST(Bleu, IdentityIsOne) {
  const auto h = P({"what", "is", "the", "weather", "in", "[city]"});
  EXPECT_EQ(bleu(h, {h}), 1.0);
}

TEST(Bleu, DisjointIsBelowSmoothingFloor) {
  EXPECT_LT(bleu(P({"a", "b", "c"}), {P({"x", "y", "z"})}), 1e-8);
}

TEST(Bleu, HandValueForPartialOverlap) {
  const double expected = std::exp((std::log(2.0 / 3) + std::log(0.5) + 2 * std::log(1e-9)) / 4);
  EXPECT_NEAR(bleu(P({"a", "b", "c"}), {P({"a", "b", "d"})}), expected, 1e-15);
}

TEST(Bleu, EmptyHypothesisIsZero) {
  EXPECT_EQ(bleu(Pattern{}, {P({"a"})}), 0.0);
  EXPECT_THROW(bleu(P({"a"}), {}), ValidationError);
}

TEST(Bleu, MatchesBruteForceOracle) {
  Rng r(21);
  for (int trial = 0; trial < 300; ++trial) {
    const auto h = random_pattern(r, 9, 5);
    std::vector<Pattern> refs;
    std::vector<testing::Tokens> ref_tokens;
    const int nr = 1 + static_cast<int>(r.below(4));
    for (int k = 0; k < nr; ++k) {
      refs.push_back(random_pattern(r, 9, 5));
      ref_tokens.push_back(refs.back().tokens);
    }
    EXPECT_NEAR(bleu(h, refs), testing::brute_force_bleu(h.tokens, ref_tokens), 1e-12) << h.joined();
  }
}

TEST(Bleu, SelfReferenceDominanceAndOrderInvariance) {
  Rng r(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto h = random_pattern(r, 8, 6);
    std::vector<Pattern> refs{random_pattern(r, 8, 6), random_pattern(r, 8, 6), random_pattern(r, 8, 6)};
    const double before = bleu(h, refs);
    std::reverse(refs.begin(), refs.end());
    EXPECT_EQ(bleu(h, refs), before);
    refs.push_back(h);
    const double with_self = bleu(h, refs);
    EXPECT_GE(with_self, before);
    // Shorter than the largest n-gram order, even a perfect match keeps a smoothed precision.
    if (h.size() >= 4) EXPECT_NEAR(with_self, 1.0, 1e-12);
  }
}

TEST(Bleu, BrevityPenaltyUsesClosestReference) {
  // h = 2 tokens; refs of length 3 and 10 -> r = 3.
  const auto h = P({"a", "b"});
  const double with_short = bleu(h, {P({"a", "b", "c"}), P({"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"})});
  EXPECT_NEAR(with_short, std::exp(1.0 - 3.0 / 2.0) * std::exp((0 + 0 + 2 * std::log(1e-9)) / 4), 1e-15);
}

EmbeddingTable separable_table() {
  EmbeddingTable t(3);
  t.set("play", Eigen::Vector3d(1, 0, 0));
  t.set("music", Eigen::Vector3d(0.9, 0.1, 0));
  t.set("song", Eigen::Vector3d(0.8, 0, 0.2));
  t.set("weather", Eigen::Vector3d(0, 1, 0));
  t.set("rain", Eigen::Vector3d(0.1, 0.9, 0));
  t.set("sunny", Eigen::Vector3d(0, 0.8, 0.2));
  return t;
}

Dataset separable_dataset() {
  std::vector<Utterance> u;
  for (const auto* s : {"play music", "play song", "play", "music song"}) {
    u.push_back(make_utterance({{s, std::nullopt}}, "PlayMusic"));
  }
  for (const auto* s : {"weather rain", "sunny weather", "rain", "weather"}) {
    u.push_back(make_utterance({{s, std::nullopt}}, "GetWeather"));
  }
  return Dataset::from_utterances(std::move(u));
}

TEST(Oracle, SeparableTrainingAccuracyIsOne) {
  const auto t = separable_table();
  const auto d = separable_dataset();
  const auto o = train_oracle(d, t);
  EXPECT_EQ(o.intents, d.intents);
  EXPECT_EQ(oracle_accuracy(o, d, t), 1.0);
  EXPECT_EQ(classify_intent(o, P({"play", "music"}), t), "PlayMusic");
  EXPECT_EQ(classify_intent(o, P({"music", "play"}), t), "PlayMusic");
  EXPECT_EQ(classify_intent(o, Pattern{}, t), o.intents[0]);
}

TEST(Oracle, SingleIntentRejected) {
  const auto d = Dataset::from_utterances({make_utterance({{"play", std::nullopt}}, "PlayMusic")});
  EXPECT_THROW(train_oracle(d, separable_table()), ValidationError);
}

TEST(Oracle, TiesGoToLowestIndex) {
  OracleClassifier o;
  o.intents = {"A", "B", "C"};
  o.weights = Eigen::MatrixXd::Zero(3, 3);
  o.bias = Eigen::VectorXd::Zero(3);
  EXPECT_EQ(classify_intent(o, P({"play"}), separable_table()), "A");
  o.bias << 0, 1, 1;
  EXPECT_EQ(classify_intent(o, P({"play"}), separable_table()), "B");
}

TEST(Oracle, JsonRoundTrip) {
  const auto t = separable_table();
  const auto o = train_oracle(separable_dataset(), t);
  const nlohmann::json j = o;
  const auto back = j.get<OracleClassifier>();
  EXPECT_EQ(back.intents, o.intents);
  EXPECT_TRUE(back.weights.isApprox(o.weights));
}

struct Fixture {
  EmbeddingTable table = separable_table();
  Dataset reference = separable_dataset();
  OracleClassifier oracle = train_oracle(reference, table);
};

TEST(Evaluate, OriginalityZeroWhenGeneratedIsTraining) {
  Fixture f;
  std::map<std::string, std::vector<Pattern>> gen;
  std::unordered_set<Pattern, PatternHash> train(f.reference.patterns.begin(), f.reference.patterns.end());
  for (std::size_t i = 0; i < f.reference.size(); ++i) gen[f.reference.utterances[i].intent].push_back(f.reference.patterns[i]);
  const auto r = evaluate_generation(gen, f.reference, train, f.oracle, f.table);
  EXPECT_EQ(r.aggregate.originality.value(), 0.0);
  EXPECT_EQ(r.aggregate.conditioning_accuracy, 1.0);
  // Every agreeing sentence is its own reference, so quality is the best it can be per sentence.
  double expected = 0;
  for (const auto& p : f.reference.patterns) expected += bleu(p, {p});
  EXPECT_NEAR(r.aggregate.bleu_quality.value(), expected / static_cast<double>(f.reference.size()), 1e-12);
}

TEST(Evaluate, IdenticalSentencesHaveZeroDiversity) {
  Fixture f;
  std::map<std::string, std::vector<Pattern>> gen{{"PlayMusic", std::vector<Pattern>(5, P({"play", "music", "song", "music"}))}};
  const auto r = evaluate_generation(gen, f.reference, {}, f.oracle, f.table);
  EXPECT_EQ(r.per_intent[0].bleu_diversity.value(), 0.0);
  EXPECT_EQ(r.aggregate.originality.value(), 1.0);
}

TEST(Evaluate, OracleDisagreementLeavesMetricsMissing) {
  Fixture f;
  std::map<std::string, std::vector<Pattern>> gen{{"PlayMusic", {P({"weather", "rain"}), P({"sunny"})}}};
  const auto r = evaluate_generation(gen, f.reference, {}, f.oracle, f.table);
  EXPECT_EQ(r.aggregate.conditioning_accuracy, 0.0);
  EXPECT_FALSE(r.aggregate.bleu_quality.has_value());
  EXPECT_FALSE(r.aggregate.bleu_diversity.has_value());
  EXPECT_FALSE(r.aggregate.originality.has_value());
}

TEST(Evaluate, SingleAgreeingSentenceHasNoDiversity) {
  Fixture f;
  std::map<std::string, std::vector<Pattern>> gen{{"PlayMusic", {P({"play", "song"}), P({"rain"})}}};
  const auto r = evaluate_generation(gen, f.reference, {}, f.oracle, f.table);
  EXPECT_EQ(r.per_intent[0].agreeing, 1u);
  EXPECT_FALSE(r.per_intent[0].bleu_diversity.has_value());
  EXPECT_TRUE(r.per_intent[0].bleu_quality.has_value());
  EXPECT_EQ(r.aggregate.conditioning_accuracy, 0.5);
}

TEST(Evaluate, UnknownIntentRejected) {
  Fixture f;
  std::map<std::string, std::vector<Pattern>> gen{{"Nope", {P({"play"})}}};
  EXPECT_THROW(evaluate_generation(gen, f.reference, {}, f.oracle, f.table), ValidationError);
}

TEST(Evaluate, AggregatesAreCountWeightedMeans) {
  Fixture f;
  Rng r(3);
  const std::vector<std::string> music{"play", "music", "song"}, weather{"weather", "rain", "sunny"};
  auto draw = [&](const std::vector<std::string>& words, int n) {
    std::vector<Pattern> out;
    for (int i = 0; i < n; ++i) {
      Pattern p;
      const int len = 1 + static_cast<int>(r.below(4));
      for (int k = 0; k < len; ++k) p.tokens.push_back(words[r.below(3)]);
      out.push_back(p);
    }
    return out;
  };
  std::map<std::string, std::vector<Pattern>> gen{{"PlayMusic", draw(music, 9)}, {"GetWeather", draw(weather, 4)}};
  gen["PlayMusic"].push_back(P({"rain"}));
  const auto rep = evaluate_generation(gen, f.reference, {}, f.oracle, f.table);
  double q = 0, w = 0, g = 0, a = 0;
  for (const auto& m : rep.per_intent) {
    q += *m.bleu_quality * m.agreeing;
    w += m.agreeing;
    g += m.generated;
    a += m.conditioning_accuracy * m.generated;
  }
  EXPECT_NEAR(*rep.aggregate.bleu_quality, q / w, 1e-12);
  EXPECT_NEAR(rep.aggregate.conditioning_accuracy, a / g, 1e-12);
  for (const auto* name : GenerationReport::kMetricNames) {
    const auto v = rep.metric(name);
    ASSERT_TRUE(v.has_value());
    EXPECT_GE(*v, 0.0);
    EXPECT_LE(*v, 1.0);
  }
}

TEST(Evaluate, DuplicateNeverRaisesDiversityAndOrderDoesNotMatter) {
  Fixture f;
  std::vector<Pattern> base{P({"play", "music"}), P({"play", "song", "music"}), P({"music", "song"}), P({"play"})};
  auto div = [&](const std::vector<Pattern>& s) {
    return *evaluate_generation({{"PlayMusic", s}}, f.reference, {}, f.oracle, f.table).aggregate.bleu_diversity;
  };
  const double d = div(base);
  auto reversed = base;
  std::reverse(reversed.begin(), reversed.end());
  EXPECT_NEAR(div(reversed), d, 1e-12);
  for (const auto& p : base) {
    auto more = base;
    more.push_back(p);
    EXPECT_LE(div(more), d + 1e-12);
  }
}

TEST(Evaluate, CsvJsonAndAudit) {
  Fixture f;
  std::map<std::string, std::vector<Pattern>> gen{{"PlayMusic", {P({"play", "song"}), P({"play", "music"}), P({"rain"})}}};
  const auto r = evaluate_generation(gen, f.reference, {}, f.oracle, f.table);
  std::ostringstream csv, audit;
  write_report_csv(r, csv);
  write_audit_csv(r, audit);
  EXPECT_NE(csv.str().find("\nALL,3,2,"), std::string::npos) << csv.str();
  const std::string audit_text = audit.str();
  EXPECT_EQ(std::count(audit_text.begin(), audit_text.end(), '\n'), 4);
  const auto j = report_to_json(r);
  EXPECT_EQ(j["conditioning_accuracy_averaging"], "micro");
  EXPECT_EQ(j["per_intent"].size(), 1u);
}

}  // namespace
}  // namespace cvaegen
