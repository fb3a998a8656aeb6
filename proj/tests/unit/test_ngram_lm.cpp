// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "cvaegen/ngram_lm.hpp"
#include "cvaegen/rng.hpp"
#include "oracles/kn_bruteforce.hpp"

namespace cvaegen::lm {
namespace {

Pattern P(const std::string& text) { return Pattern{tokenize(text)}; }

std::vector<Pattern> random_corpus(Rng& r, int sentences, int vocab, int max_len) {
  std::vector<Pattern> out;
  for (int i = 0; i < sentences; ++i) {
    Pattern p;
    const int len = static_cast<int>(r.below(static_cast<std::uint64_t>(max_len + 1)));
    for (int k = 0; k < len; ++k) p.tokens.push_back("t" + std::to_string(r.below(static_cast<std::uint64_t>(vocab))));
    out.push_back(p);
  }
  return out;
}

std::vector<testing::BruteForceKn::Tokens> as_tokens(const std::vector<Pattern>& ps) {
  std::vector<testing::BruteForceKn::Tokens> out;
  for (const auto& p : ps) out.push_back(p.tokens);
  return out;
}

TEST(Counts, RepeatedTokenBigrams) {
  const auto c = count_ngrams({P("a a a")}, 2);
  EXPECT_EQ(c.count({"a"}), 3);
  EXPECT_EQ(c.count({"</s>"}), 1);
  EXPECT_EQ(c.count({"a", "a"}), 2);
  EXPECT_EQ(c.count({"<s>", "a"}), 1);
  EXPECT_EQ(c.count({"a", "</s>"}), 1);
  EXPECT_EQ(c.count({"<s>"}), 0);
  EXPECT_EQ(c.continuation[0].at({"a"}), 2);  // left neighbours <s> and a
}

TEST(Counts, DuplicatesCountedOnce) {
  EXPECT_EQ(count_ngrams({P("x y"), P("x y"), P("z")}), count_ngrams({P("z"), P("x y")}));
  EXPECT_EQ(count_ngrams({P("x y"), P("x y")}).sentences, 1u);
}

TEST(Counts, EmptyCorpusCannotBeEstimated) {
  const auto c = count_ngrams({}, 3);
  EXPECT_TRUE(c.empty());
  EXPECT_THROW(estimate_kneser_ney(c), EstimationError);
  EXPECT_THROW(count_ngrams({}, 0), ValidationError);
}

TEST(Estimate, DiscountDomain) {
  const auto c = count_ngrams({P("a b")}, 2);
  EXPECT_THROW(estimate_kneser_ney(c, 0.0), DomainError);
  EXPECT_THROW(estimate_kneser_ney(c, 1.0), DomainError);
  EXPECT_NO_THROW(estimate_kneser_ney(c, 0.5));
}

TEST(Estimate, UnknownAlwaysInVocabulary) {
  const auto lm = estimate_kneser_ney(count_ngrams({P("a b")}, 3));
  EXPECT_TRUE(lm.vocabulary().contains(kUnk));
  EXPECT_EQ(lm.map_token("never-seen"), kUnk);
  EXPECT_GT(lm.prob("never-seen", {"a"}), 0.0);
}

TEST(Estimate, DistributionsNormalizeOverManyContexts) {
  Rng r(8);
  const auto corpus = random_corpus(r, 60, 7, 6);
  for (int order : {1, 2, 3, 4}) {
    const auto lm = estimate_kneser_ney(count_ngrams(corpus, order));
    std::vector<Ngram> contexts{{}, {"<s>", "<s>", "<s>"}, {"zz", "t1"}};
    for (int k = 0; contexts.size() < 120; ++k) {
      Ngram h;
      const int len = static_cast<int>(r.below(4));
      for (int i = 0; i < len; ++i) h.push_back(r.below(5) == 0 ? "<s>" : "t" + std::to_string(r.below(8)));
      contexts.push_back(h);
    }
    for (const auto& h : contexts) {
      double s = 0;
      for (const auto& w : lm.vocabulary()) s += lm.prob(w, h);
      EXPECT_NEAR(s, 1.0, 1e-12) << "order " << order;
    }
  }
}

TEST(Estimate, MatchesBruteForceOracle) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng r(seed);
    const int order = 1 + static_cast<int>(r.below(4));
    const auto corpus = random_corpus(r, 4 + static_cast<int>(r.below(12)), 3 + static_cast<int>(r.below(5)), 5);
    const double d = 0.1 + 0.8 * r.uniform();
    const auto lm = estimate_kneser_ney(count_ngrams(corpus, order), d);
    const testing::BruteForceKn oracle(as_tokens(corpus), order, d);
    ASSERT_EQ(lm.vocabulary(), oracle.vocabulary());
    for (int q = 0; q < 60; ++q) {
      Ngram h;
      const int len = static_cast<int>(r.below(static_cast<std::uint64_t>(order)));
      for (int i = 0; i < len; ++i) h.push_back(r.below(4) == 0 ? "<s>" : "t" + std::to_string(r.below(9)));
      const std::string w = r.below(6) == 0 ? "</s>" : "t" + std::to_string(r.below(9));
      EXPECT_NEAR(lm.prob(w, h), oracle.prob(w, h), 1e-9) << "seed " << seed;
    }
    const auto test = random_corpus(r, 10, 9, 6);
    EXPECT_NEAR(perplexity(lm, test), oracle.perplexity(as_tokens(test)), 1e-9 * oracle.perplexity(as_tokens(test)));
  }
}

TEST(Estimate, ForcedTokensMatchOracle) {
  Rng r(99);
  const auto corpus = random_corpus(r, 8, 4, 5);
  auto counts = count_ngrams(corpus, 3);
  counts.forced = {"extra1", "extra2", "t0"};
  const auto lm = estimate_kneser_ney(counts);
  const testing::BruteForceKn oracle(as_tokens(corpus), 3, 0.75, {"extra1", "extra2", "t0"});
  ASSERT_EQ(lm.vocabulary(), oracle.vocabulary());
  for (const auto& w : lm.vocabulary()) {
    EXPECT_NEAR(lm.prob(w, {"t1", "t2"}), oracle.prob(w, {"t1", "t2"}), 1e-12);
    EXPECT_NEAR(lm.prob(w, {}), oracle.prob(w, {}), 1e-12);
  }
}

TEST(Perplexity, UniformModelGivesVocabularySize) {
  NgramCounts c;
  c.order = 1;
  c.counts.resize(1);
  c.forced = {"a", "b", "c"};
  c.sentences = 1;
  const auto lm = estimate_kneser_ney(c);
  ASSERT_EQ(lm.vocabulary().size(), 4u);
  EXPECT_NEAR(perplexity(lm, {P("a b"), P("c q q q")}), 4.0, 1e-12);
  EXPECT_THROW(perplexity(lm, {}), ValidationError);
}

TEST(Perplexity, HandComputedBigram) {
  // Sentences "a" and "b", order 2, D = 0.5.
  // Continuation counts: a 1, b 1, </s> 2 (after a and b), <unk> forced 1; total 5.
  // Context <s>: a and b each once -> p(a|<s>) = 0.5/2 + 0.5*2/2*0.2 = 0.35.
  // Context a: </s> once -> p(</s>|a) = 0.5/1 + 0.5*1/1*0.4 = 0.7.
  const auto lm = estimate_kneser_ney(count_ngrams({P("a"), P("b")}, 2), 0.5);
  EXPECT_NEAR(lm.prob("a", {"<s>"}), 0.35, 1e-15);
  EXPECT_NEAR(lm.prob("</s>", {"a"}), 0.7, 1e-15);
  EXPECT_NEAR(perplexity(lm, {P("a")}), std::exp(-(std::log(0.35) + std::log(0.7)) / 2), 1e-12);
}

TEST(Unify, AddsMissingTokensAndPreservesNormalization) {
  const auto a = estimate_kneser_ney(count_ngrams({P("x y"), P("y z")}, 3));
  const auto b = estimate_kneser_ney(count_ngrams({P("p q")}, 3));
  std::set<std::string> all = a.vocabulary();
  all.insert(b.vocabulary().begin(), b.vocabulary().end());
  const auto u = unify_vocabulary({a, b}, all);
  for (const auto& lm : u) {
    EXPECT_EQ(lm.vocabulary(), all);
    double s = 0;
    for (const auto& w : all) s += lm.prob(w, {"x", "y"});
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  // In model a, q is now scored as itself instead of as <unk>.
  EXPECT_EQ(u[0].map_token("q"), "q");
  EXPECT_EQ(u[0].level_count({"q"}), 1);
  // Unifying with its own vocabulary is the identity.
  const auto same = unify_vocabulary({a}, a.vocabulary());
  EXPECT_EQ(same[0].prob("z", {"x", "y"}), a.prob("z", {"x", "y"}));
}

TEST(Augmentation, SameDataGivesZeroChange) {
  const std::vector<Pattern> d0{P("what is the weather"), P("play some music"), P("book a table")};
  const std::vector<Pattern> test{P("what is the music"), P("play the weather")};
  const auto r = augmentation_report(d0, d0, d0, test);
  EXPECT_EQ(r.rel_aug, 0.0);
  EXPECT_EQ(r.rel_ref, 0.0);
  EXPECT_EQ(r.d0_size, 3u);
}

TEST(Augmentation, RequiresSeedSubset) {
  const std::vector<Pattern> d0{P("a b"), P("c d")};
  EXPECT_THROW(augmentation_report(d0, {P("a b")}, d0, {P("a")}), ValidationError);
  EXPECT_THROW(augmentation_report(d0, d0, {P("c d")}, {P("a")}), ValidationError);
}

TEST(Augmentation, InDomainDataLowersPerplexity) {
  Rng r(4);
  const std::vector<std::string> subj{"i", "we", "they"}, verb{"want", "need", "like"}, obj{"music", "tea", "rain", "jazz"};
  auto sent = [&] { return Pattern{{subj[r.below(3)], verb[r.below(3)], obj[r.below(4)]}}; };
  std::vector<Pattern> d0, extra, test;
  for (int i = 0; i < 5; ++i) d0.push_back(sent());
  for (int i = 0; i < 40; ++i) extra.push_back(sent());
  for (int i = 0; i < 20; ++i) test.push_back(sent());
  auto aug = d0;
  aug.insert(aug.end(), extra.begin(), extra.end());
  const auto rep = augmentation_report(d0, aug, aug, test);
  EXPECT_LT(rep.ppl_aug, rep.ppl_d0);
  EXPECT_LT(rep.rel_aug, 0.0);
}

TEST(Arpa, RoundTripReproducesScores) {
  Rng r(12);
  const auto corpus = random_corpus(r, 30, 6, 6);
  for (int order : {1, 2, 3, 4}) {
    const auto lm = estimate_kneser_ney(count_ngrams(corpus, order));
    std::stringstream ss;
    write_arpa(lm, ss);
    const auto arpa = read_arpa(ss);
    EXPECT_EQ(arpa.order(), order);
    for (const auto& p : random_corpus(r, 20, 8, 6)) {
      EXPECT_NEAR(arpa.sequence_log_prob(p), lm.sequence_log_prob(p), 1e-9) << "order " << order << " " << p.joined();
    }
  }
}

TEST(Arpa, FileRoundTrip) {
  const auto lm = estimate_kneser_ney(count_ngrams({P("a b c"), P("a c")}, 3));
  const auto path = std::filesystem::temp_directory_path() / "cvaegen_test_model.arpa";
  save_arpa(lm, path);
  const auto back = load_arpa(path);
  EXPECT_NEAR(back.prob("c", {"a", "b"}), lm.prob("c", {"a", "b"}), 1e-10);
  std::filesystem::remove(path);
  EXPECT_THROW(load_arpa(path), IoError);
}

TEST(Arpa, MalformedInputReportsLine) {
  std::istringstream bad_count("\\data\\\nngram 1=3\n\n\\1-grams:\n-0.5\ta\n-0.5\tb\n\\end\\\n");
  EXPECT_THROW(read_arpa(bad_count), FormatError);
  std::istringstream bad_section("\\data\\\nngram 1=1\n\\2-grams:\n-1\ta b\n");
  try {
    read_arpa(bad_section);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  std::istringstream empty("");
  EXPECT_THROW(read_arpa(empty), FormatError);
}

}  // namespace
}  // namespace cvaegen::lm
