// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include "cvaegen/embeddings.hpp"

namespace cvaegen {
namespace {

namespace fs = std::filesystem;

EmbeddingTable table2d() {
  EmbeddingTable t(2);
  t.set("a", Eigen::Vector2d(1, 0));
  t.set("b", Eigen::Vector2d(0, 1));
  t.set("c", Eigen::Vector2d(1, 1));
  t.set("v", Eigen::Vector2d(0.3, -0.7));
  t.set("vneg", Eigen::Vector2d(-0.3, 0.7));
  return t;
}

fs::path write_file(const std::string& name, const std::string& body) {
  const auto p = fs::temp_directory_path() / ("cvaegen_emb_" + name);
  std::ofstream(p) << body;
  return p;
}

TEST(LoadEmbeddings, MinimalFile) {
  const auto r = load_word_embeddings(write_file("min.txt", "hello 0.1 0.2\n"), 2);
  EXPECT_EQ(r.loaded, 1u);
  EXPECT_EQ(r.skipped, 0u);
  EXPECT_TRUE(r.table.has("hello"));
  EXPECT_DOUBLE_EQ(r.table.lookup("hello")[1], 0.2);
}

TEST(LoadEmbeddings, WrongArityLineIsSkipped) {
  const auto r = load_word_embeddings(write_file("arity.txt", "hello 0.1 0.2\nshort 0.5\n"), 2);
  EXPECT_EQ(r.loaded, 1u);
  EXPECT_EQ(r.skipped, 1u);
}

TEST(LoadEmbeddings, Errors) {
  EXPECT_THROW(load_word_embeddings(fs::temp_directory_path() / "cvaegen_emb_missing.txt", 2), IoError);
  EXPECT_THROW(load_word_embeddings(write_file("none.txt", "x 1\n"), 2), FormatError);
}

TEST(LoadEmbeddings, SaveLoadRoundTrip) {
  const auto t = table2d();
  const auto p = fs::temp_directory_path() / "cvaegen_emb_roundtrip.txt";
  save_word_embeddings(t, p);
  const auto r = load_word_embeddings(p, 2);
  EXPECT_EQ(r.loaded, t.known_tokens().size());
  EXPECT_TRUE(r.table.lookup("v").isApprox(t.lookup("v")));
}

TEST(EmbeddingTable, OovLookupIsIdempotentAndSmall) {
  EmbeddingTable t(100, 5);
  const Eigen::VectorXd first = t.lookup("[City]");
  const Eigen::VectorXd second = t.lookup("[City]");
  EXPECT_EQ(first, second);
  EXPECT_FALSE(t.has("[City]"));
  EXPECT_LE(first.cwiseAbs().maxCoeff(), 0.5 / 100);
  // The vector depends on the token and seed only, not on lookup order.
  EmbeddingTable u(100, 5);
  u.lookup("other");
  EXPECT_EQ(u.lookup("[City]"), first);
}

TEST(EmbeddingTable, ConcurrentReadersAgree) {
  EmbeddingTable t(16, 1);
  std::vector<Eigen::VectorXd> out(8);
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&, i] {
      for (int k = 0; k < 200; ++k) t.lookup("tok" + std::to_string(k % 37));
      out[static_cast<std::size_t>(i)] = t.lookup("tok5");
    });
  }
  for (auto& th : threads) th.join();
  for (const auto& v : out) EXPECT_EQ(v, out[0]);
}

TEST(EmbedSentence, MeanPooling) {
  const auto t = table2d();
  EXPECT_EQ(embed_sentence(Pattern{{"a"}}, t).vector, t.lookup("a"));
  EXPECT_TRUE(embed_sentence(Pattern{{"v", "vneg"}}, t).vector.isZero());
  EXPECT_TRUE(embed_sentence(Pattern{{"a", "b"}}, t).vector.isApprox(Eigen::Vector2d(0.5, 0.5)));
  EXPECT_TRUE(embed_sentence(Pattern{}, t).vector.isZero());
  EXPECT_TRUE(embed_sentence(Pattern{{"a", "b", "c"}}, t).vector.isApprox(embed_sentence(Pattern{{"c", "a", "b"}}, t).vector));
}

Dataset intent_set(const std::vector<std::pair<std::string, std::string>>& rows) {
  std::vector<Utterance> u;
  for (const auto& [text, intent] : rows) u.push_back(make_utterance({{text, std::nullopt}}, intent));
  return Dataset::from_utterances(std::move(u));
}

TEST(IntentCentroids, HandMeans) {
  const auto t = table2d();
  const auto c1 = intent_centroids(intent_set({{"a", "X"}, {"b", "X"}, {"c", "X"}}), t);
  ASSERT_EQ(c1.size(), 1u);
  EXPECT_TRUE(c1[0].vector.isApprox(Eigen::Vector2d(2.0 / 3, 2.0 / 3)));
  const auto c2 = intent_centroids(intent_set({{"v", "Y"}, {"vneg", "Y"}}), t);
  EXPECT_TRUE(c2[0].vector.isZero());
  const auto c3 = intent_centroids(intent_set({{"a b", "Z"}}), t);
  EXPECT_TRUE(c3[0].vector.isApprox(Eigen::Vector2d(0.5, 0.5)));
}

TEST(Cosine, SymmetryAndScaleInvariance) {
  Rng r(3);
  for (int i = 0; i < 50; ++i) {
    Eigen::VectorXd u(5), v(5);
    for (int k = 0; k < 5; ++k) {
      u[k] = r.normal();
      v[k] = r.normal();
    }
    const double s = r.uniform(0.1, 10);
    EXPECT_NEAR(*cosine(u, v), *cosine(v, u), 1e-12);
    EXPECT_NEAR(*cosine(u, s * v), *cosine(u, v), 1e-12);
  }
  EXPECT_FALSE(cosine(Eigen::Vector2d::Zero(), Eigen::Vector2d(1, 0)).has_value());
}

Dataset reservoir_set() {
  return intent_set({{"a", "R"}, {"b", "R"}, {"c", "R"}, {"a b", "R"}, {"v", "R"}, {"vneg", "R"}, {"v vneg", "R"}});
}

TEST(SelectReservoir, BoundsAndSelfMatch) {
  const auto t = table2d();
  const auto res = reservoir_set();
  const auto centroids = intent_centroids(intent_set({{"c", "X"}}), t);
  // v vneg embeds to zero and is dropped even at beta = -1.
  EXPECT_EQ(select_reservoir(res, centroids, -1.0, t).size(), res.size() - 1);
  EXPECT_LE(select_reservoir(res, centroids, 1.0, t).size(), 1u);
  const auto kept = select_reservoir(res, centroids, 0.9, t);
  std::set<std::string> texts;
  for (const auto& u : kept.utterances) texts.insert(u.raw_text);
  EXPECT_TRUE(texts.contains("c"));
  EXPECT_TRUE(texts.contains("a b"));
  EXPECT_FALSE(texts.contains("a"));
}

TEST(SelectReservoir, MonotoneInBeta) {
  const auto t = table2d();
  const auto res = reservoir_set();
  const auto centroids = intent_centroids(intent_set({{"a", "X"}, {"v", "Y"}}), t);
  Rng r(8);
  for (int i = 0; i < 100; ++i) {
    double b1 = r.uniform(-1, 1), b2 = r.uniform(-1, 1);
    if (b1 > b2) std::swap(b1, b2);
    const auto loose = select_reservoir(res, centroids, b1, t);
    const auto strict = select_reservoir(res, centroids, b2, t);
    std::multiset<std::string> l;
    for (const auto& u : loose.utterances) l.insert(u.raw_text);
    for (const auto& u : strict.utterances) EXPECT_TRUE(l.contains(u.raw_text));
  }
}

TEST(Calibration, CsvAndSelectivity) {
  const auto t = table2d();
  const auto rows = calibration_report(reservoir_set(), intent_centroids(intent_set({{"c", "X"}}), t), t);
  ASSERT_EQ(rows.size(), 7u);
  EXPECT_FALSE(rows[6].max_cosine.has_value());
  std::ostringstream out;
  write_calibration_csv(rows, out);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "utterance_id,max_cosine");
  const double beta = beta_for_selectivity(rows, 0.5);
  std::size_t kept = 0;
  for (const auto& r : rows) kept += r.max_cosine && *r.max_cosine > beta;
  EXPECT_GE(kept, 2u);
  EXPECT_LE(kept, 4u);
}

TEST(CooccurrenceEmbeddings, UnitRowsAndRelatedWordsCloser) {
  std::vector<std::vector<std::string>> sents;
  for (int i = 0; i < 30; ++i) {
    sents.push_back({"play", "some", "jazz", "music"});
    sents.push_back({"play", "some", "rock", "music"});
    sents.push_back({"weather", "in", "paris", "today"});
    sents.push_back({"weather", "in", "oslo", "today"});
  }
  const auto t = train_cooccurrence_embeddings(sents, 4, 3);
  for (const auto& tok : t.known_tokens()) EXPECT_NEAR(t.lookup(tok).norm(), 1.0, 1e-9);
  EXPECT_GT(*cosine(t.lookup("jazz"), t.lookup("rock")), *cosine(t.lookup("jazz"), t.lookup("oslo")));
  EXPECT_GT(*cosine(t.lookup("paris"), t.lookup("oslo")), *cosine(t.lookup("paris"), t.lookup("rock")));
}

}  // namespace
}  // namespace cvaegen
