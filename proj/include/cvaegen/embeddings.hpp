// SPDX-License-Identifier: Apache-2.0
//
// Word embedding tables, mean-pooled sentence embeddings, intent centroids
// and cosine-threshold selection of reservoir sentences.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "cvaegen/corpus.hpp"
#include "cvaegen/error.hpp"
#include "cvaegen/rng.hpp"

namespace cvaegen {

/// token -> dense vector, with seeded random vectors for unknown tokens.
///
/// The random vector of an unknown token depends only on (seed, token), so
/// results do not depend on lookup order. Lookups insert into a cache under a
/// lock and are safe from several threads.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(int dim = 100, std::uint64_t rng_seed = 17) : dim_(dim), seed_(rng_seed) {
    if (dim <= 0) throw ValidationError("embedding dim must be positive");
  }

  EmbeddingTable(const EmbeddingTable& other) : dim_(other.dim_), seed_(other.seed_) {
    std::shared_lock lock(other.mutex_);
    vectors_ = other.vectors_;
    known_ = other.known_;
  }
  EmbeddingTable& operator=(const EmbeddingTable& other) {
    if (this == &other) return *this;
    std::unique_lock mine(mutex_, std::defer_lock);
    std::shared_lock theirs(other.mutex_, std::defer_lock);
    std::lock(mine, theirs);
    dim_ = other.dim_;
    seed_ = other.seed_;
    vectors_ = other.vectors_;
    known_ = other.known_;
    return *this;
  }

  int dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }

  void set(const std::string& token, Eigen::VectorXd vec) {
    if (vec.size() != dim_) throw ValidationError("embedding for '" + token + "' has wrong length");
    std::unique_lock lock(mutex_);
    vectors_[token] = std::move(vec);
    known_[token] = true;
  }

  /// True when the token came from a file or set(); false for OOV vectors.
  bool has(const std::string& token) const {
    std::shared_lock lock(mutex_);
    auto it = known_.find(token);
    return it != known_.end() && it->second;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return vectors_.size();
  }

  /// Returns the stored vector, creating and caching a random one for
  /// unknown tokens. Components are uniform in [-0.5/dim, 0.5/dim].
  const Eigen::VectorXd& lookup(const std::string& token) const {
    {
      std::shared_lock lock(mutex_);
      auto it = vectors_.find(token);
      if (it != vectors_.end()) return it->second;
    }
    Rng rng(Rng::derive(seed_, fnv(token)));
    Eigen::VectorXd v(dim_);
    const double half = 0.5 / static_cast<double>(dim_);
    for (int i = 0; i < dim_; ++i) v[i] = rng.uniform(-half, half);
    std::unique_lock lock(mutex_);
    auto [it, inserted] = vectors_.emplace(token, std::move(v));
    if (inserted) known_[token] = false;
    return it->second;  // unordered_map references survive rehashing
  }

  /// Stored (non-random) tokens, sorted.
  std::vector<std::string> known_tokens() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [t, k] : known_) {
      if (k) out.push_back(t);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  // FNV-1a rather than std::hash, which differs between standard libraries.
  static std::uint64_t fnv(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return h;
  }

  int dim_;
  std::uint64_t seed_;
  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<std::string, Eigen::VectorXd> vectors_;
  mutable std::unordered_map<std::string, bool> known_;
};

struct EmbeddingLoadResult {
  EmbeddingTable table;
  std::size_t loaded = 0;
  std::size_t skipped = 0;
};

/// Reads the GloVe text layout: one token followed by `dim` floats per line.
/// Lines of the wrong arity (or with unparsable numbers) are skipped.
inline EmbeddingLoadResult load_word_embeddings(const std::filesystem::path& path, int dim,
                                                std::uint64_t rng_seed = 17) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file " + path.string());
  EmbeddingLoadResult result{EmbeddingTable(dim, rng_seed)};
  std::string line;
  std::vector<double> values;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string token;
    if (!(ss >> token)) continue;
    values.clear();
    std::string field;
    bool ok = true;
    while (ss >> field) {
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (end != field.c_str() + field.size()) {
        ok = false;
        break;
      }
      values.push_back(v);
    }
    if (!ok || values.size() != static_cast<std::size_t>(dim)) {
      ++result.skipped;
      continue;
    }
    result.table.set(token, Eigen::Map<Eigen::VectorXd>(values.data(), dim));
    ++result.loaded;
  }
  if (result.loaded == 0) throw FormatError("no valid embedding lines in " + path.string());
  return result;
}

inline void save_word_embeddings(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(6);
  for (const auto& token : table.known_tokens()) {
    out << token;
    const auto& v = table.lookup(token);
    for (int i = 0; i < v.size(); ++i) out << ' ' << v[i];
    out << '\n';
  }
}

/// Trains word vectors from raw sentences: distance-weighted co-occurrence
/// counts within a symmetric window, log(1 + count), then the top
/// eigenvectors of that matrix scaled by their eigenvalues. Rows are
/// L2-normalized. Used to produce a GloVe-format table when no pre-trained
/// file is available.
inline EmbeddingTable train_cooccurrence_embeddings(const std::vector<std::vector<std::string>>& sentences,
                                                    int dim, int window = 3, std::uint64_t rng_seed = 17) {
  std::map<std::string, int> index;
  for (const auto& s : sentences) {
    for (const auto& t : s) index.emplace(t, 0);
  }
  int next = 0;
  for (auto& [t, i] : index) i = next++;
  const int v = next;
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(v, v);
  for (const auto& s : sentences) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      const int a = index[s[i]];
      for (std::size_t j = i + 1; j < std::min(s.size(), i + 1 + static_cast<std::size_t>(window)); ++j) {
        const int b = index[s[j]];
        const double w = 1.0 / static_cast<double>(j - i);
        counts(a, b) += w;
        counts(b, a) += w;
      }
    }
  }
  const double total = counts.sum();
  EmbeddingTable table(dim, rng_seed);
  if (v == 0 || total <= 0.0) return table;
  const Eigen::MatrixXd logc = counts.array().log1p().matrix();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(logc);
  const Eigen::VectorXd& evals = solver.eigenvalues();  // ascending
  const Eigen::MatrixXd& evecs = solver.eigenvectors();
  const int k = std::min(dim, v);
  Eigen::MatrixXd emb = Eigen::MatrixXd::Zero(v, dim);
  for (int c = 0; c < k; ++c) {
    const int src = v - 1 - c;
    Eigen::VectorXd col = evecs.col(src) * std::max(0.0, evals[src]);
    // Fix the eigenvector sign so the output is unique.
    Eigen::Index arg;
    col.cwiseAbs().maxCoeff(&arg);
    if (col[arg] < 0) col = -col;
    emb.col(c) = col;
  }
  for (const auto& [t, i] : index) {
    Eigen::VectorXd vec = emb.row(i).transpose();
    const double n = vec.norm();
    if (n > 0) vec /= n;
    table.set(t, std::move(vec));
  }
  return table;
}

struct SentenceEmbedding {
  Eigen::VectorXd vector;
  std::string source_text;
};

struct IntentCentroid {
  std::string intent;
  Eigen::VectorXd vector;
};

/// Mean of the token vectors; the zero vector for an empty pattern.
inline SentenceEmbedding embed_sentence(const Pattern& pattern, const EmbeddingTable& table) {
  SentenceEmbedding out{Eigen::VectorXd::Zero(table.dim()), pattern.joined()};
  if (pattern.empty()) return out;
  for (const auto& t : pattern.tokens) out.vector += table.lookup(t);
  out.vector /= static_cast<double>(pattern.size());
  return out;
}

/// Cosine similarity; nullopt when either vector has zero norm.
inline std::optional<double> cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return std::nullopt;
  return a.dot(b) / (na * nb);
}

inline std::vector<IntentCentroid> intent_centroids(const Dataset& dataset, const EmbeddingTable& table) {
  std::vector<IntentCentroid> out;
  for (const auto& intent : dataset.intents) {
    const auto idx = dataset.indices_of(intent);
    if (idx.empty()) throw ValidationError("intent_centroids: intent " + intent + " has no utterances");
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(table.dim());
    for (auto i : idx) sum += embed_sentence(dataset.patterns[i], table).vector;
    out.push_back({intent, sum / static_cast<double>(idx.size())});
  }
  return out;
}

struct CentroidMatch {
  double cosine = -2.0;
  std::size_t index = 0;
  bool defined = false;
};

/// Highest cosine against any centroid; ties go to the lowest index.
inline CentroidMatch best_centroid(const Eigen::VectorXd& sentence, const std::vector<IntentCentroid>& centroids) {
  CentroidMatch best;
  for (std::size_t i = 0; i < centroids.size(); ++i) {
    auto c = cosine(sentence, centroids[i].vector);
    if (!c) continue;
    if (!best.defined || *c > best.cosine) best = {*c, i, true};
  }
  return best;
}

/// Keeps reservoir utterances whose embedding has cosine > beta with at
/// least one centroid. Zero-norm embeddings are dropped.
inline Dataset select_reservoir(const Dataset& reservoir, const std::vector<IntentCentroid>& centroids,
                                double beta, const EmbeddingTable& table) {
  if (centroids.empty()) throw ValidationError("select_reservoir: no centroids");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < reservoir.size(); ++i) {
    const auto emb = embed_sentence(reservoir.patterns[i], table);
    const auto m = best_centroid(emb.vector, centroids);
    if (m.defined && m.cosine > beta) keep.push_back(i);
  }
  return reservoir.select(keep);
}

struct CalibrationRow {
  std::size_t utterance_id;
  std::optional<double> max_cosine;
};

inline std::vector<CalibrationRow> calibration_report(const Dataset& reservoir,
                                                      const std::vector<IntentCentroid>& centroids,
                                                      const EmbeddingTable& table) {
  std::vector<CalibrationRow> rows;
  rows.reserve(reservoir.size());
  for (std::size_t i = 0; i < reservoir.size(); ++i) {
    const auto m = best_centroid(embed_sentence(reservoir.patterns[i], table).vector, centroids);
    rows.push_back({i, m.defined ? std::optional<double>(m.cosine) : std::nullopt});
  }
  return rows;
}

inline void write_calibration_csv(const std::vector<CalibrationRow>& rows, std::ostream& out) {
  out << "utterance_id,max_cosine\n";
  for (const auto& r : rows) {
    out << r.utterance_id << ',';
    if (r.max_cosine) out << *r.max_cosine;
    out << '\n';
  }
}

/// Beta that keeps approximately `keep_fraction` of the defined rows.
inline double beta_for_selectivity(const std::vector<CalibrationRow>& rows, double keep_fraction) {
  std::vector<double> vals;
  for (const auto& r : rows) {
    if (r.max_cosine) vals.push_back(*r.max_cosine);
  }
  if (vals.empty()) throw ValidationError("beta_for_selectivity: no defined cosines");
  std::sort(vals.begin(), vals.end());
  const double q = std::clamp(1.0 - keep_fraction, 0.0, 1.0);
  const auto pos = static_cast<std::size_t>(std::floor(q * static_cast<double>(vals.size() - 1)));
  return vals[pos];
}

}  // namespace cvaegen
