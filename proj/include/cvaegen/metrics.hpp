// SPDX-License-Identifier: Apache-2.0
//
// Generation metrics: oracle conditioning accuracy, BLEU quality, BLEU
// diversity (1 - self-BLEU) and originality. The last three are computed per
// intent over the sentences the oracle classifies as the conditioning intent.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cvaegen/corpus.hpp"
#include "cvaegen/embeddings.hpp"
#include "cvaegen/error.hpp"

namespace cvaegen {

inline constexpr double kBleuSmoothing = 1e-9;

namespace detail {

using NgramCountMap = std::unordered_map<std::string, int>;

// Key: the n tokens joined with a unit separator, which tokenization never emits.
inline NgramCountMap ngram_counts(const std::vector<std::string>& tokens, int n) {
  NgramCountMap out;
  const int len = static_cast<int>(tokens.size());
  for (int i = 0; i + n <= len; ++i) {
    std::string key = tokens[static_cast<std::size_t>(i)];
    for (int k = 1; k < n; ++k) {
      key += '\x1f';
      key += tokens[static_cast<std::size_t>(i + k)];
    }
    ++out[key];
  }
  return out;
}

}  // namespace detail

/// Precomputed reference side of sentence BLEU: for each n-gram the largest
/// count in any single reference, plus the reference lengths.
class BleuReference {
 public:
  explicit BleuReference(const std::vector<Pattern>& references, int max_n = 4) : max_n_(max_n) {
    if (max_n < 1) throw ValidationError("bleu: max_n must be >= 1");
    max_counts_.resize(static_cast<std::size_t>(max_n));
    for (const auto& ref : references) add(ref);
  }

  void add(const Pattern& ref) {
    lengths_.push_back(static_cast<int>(ref.tokens.size()));
    for (int n = 1; n <= max_n_; ++n) {
      auto& table = max_counts_[static_cast<std::size_t>(n - 1)];
      for (const auto& [g, c] : detail::ngram_counts(ref.tokens, n)) {
        int& slot = table[g];
        slot = std::max(slot, c);
      }
    }
  }

  bool empty() const { return lengths_.empty(); }

  /// Closest reference length to h; on a tie the shorter length wins.
  int closest_length(int h) const {
    int best = lengths_.front();
    for (int r : lengths_) {
      const int d = std::abs(r - h), bd = std::abs(best - h);
      if (d < bd || (d == bd && r < best)) best = r;
    }
    return best;
  }

  double score(const Pattern& hyp) const {
    if (hyp.tokens.empty()) return 0.0;
    if (empty()) throw ValidationError("bleu: no references");
    double log_sum = 0.0;
    for (int n = 1; n <= max_n_; ++n) {
      const auto counts = detail::ngram_counts(hyp.tokens, n);
      long total = 0, clipped = 0;
      const auto& table = max_counts_[static_cast<std::size_t>(n - 1)];
      for (const auto& [g, c] : counts) {
        total += c;
        auto it = table.find(g);
        if (it != table.end()) clipped += std::min(c, it->second);
      }
      const double p = (total == 0 || clipped == 0) ? kBleuSmoothing : static_cast<double>(clipped) / total;
      log_sum += std::log(p);
    }
    const double h = static_cast<double>(hyp.tokens.size());
    const double r = closest_length(static_cast<int>(hyp.tokens.size()));
    const double bp = std::exp(std::min(0.0, 1.0 - r / h));
    return std::clamp(bp * std::exp(log_sum / max_n_), 0.0, 1.0);
  }

 private:
  int max_n_;
  std::vector<std::unordered_map<std::string, int>> max_counts_;
  std::vector<int> lengths_;
};

/// Sentence BLEU with clipped n-gram precisions, zero precisions replaced by
/// kBleuSmoothing and the closest-reference brevity penalty.
inline double bleu(const Pattern& hypothesis, const std::vector<Pattern>& references, int max_n = 4) {
  if (hypothesis.tokens.empty()) return 0.0;
  if (references.empty()) throw ValidationError("bleu: references must be non-empty");
  return BleuReference(references, max_n).score(hypothesis);
}

/// Mean over i of BLEU(s_i, {s_j : j != i}). Needs at least two sentences.
inline std::vector<double> self_bleu_scores(const std::vector<Pattern>& sentences, int max_n = 4) {
  if (sentences.size() < 2) throw ValidationError("self-BLEU needs at least two sentences");
  std::vector<double> out(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    std::vector<Pattern> others;
    others.reserve(sentences.size() - 1);
    for (std::size_t j = 0; j < sentences.size(); ++j) {
      if (j != i) others.push_back(sentences[j]);
    }
    out[i] = bleu(sentences[i], others, max_n);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Oracle classifier

struct OracleTrainingOptions {
  double learning_rate = 1.0;
  double l2 = 1e-4;
  int max_iterations = 3000;
  double tolerance = 1e-7;  // relative loss change counted as a plateau
  int patience = 20;        // consecutive plateau iterations before stopping
};

/// Multinomial logistic regression over mean-pooled word embeddings.
/// Feature standardization is folded into `weights` and `bias`.
struct OracleClassifier {
  std::vector<std::string> intents;
  Eigen::MatrixXd weights;  // K x dim
  Eigen::VectorXd bias;     // K
  int iterations = 0;
  double final_loss = 0.0;

  /// Argmax of the per-intent scores; lowest index on ties. An empty
  /// pattern maps to intent 0 by convention.
  std::size_t classify_index(const Pattern& pattern, const EmbeddingTable& table) const {
    if (pattern.tokens.empty()) return 0;
    const Eigen::VectorXd x = embed_sentence(pattern, table).vector;
    const Eigen::VectorXd s = weights * x + bias;
    std::size_t best = 0;
    for (Eigen::Index k = 1; k < s.size(); ++k) {
      if (s[k] > s[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(k);
    }
    return best;
  }
};

inline void to_json(nlohmann::json& j, const OracleClassifier& o) {
  j["intents"] = o.intents;
  j["dim"] = o.weights.cols();
  j["weights"] = std::vector<double>(o.weights.data(), o.weights.data() + o.weights.size());
  j["bias"] = std::vector<double>(o.bias.data(), o.bias.data() + o.bias.size());
  j["iterations"] = o.iterations;
  j["final_loss"] = o.final_loss;
}

inline void from_json(const nlohmann::json& j, OracleClassifier& o) {
  o.intents = j.at("intents").get<std::vector<std::string>>();
  const auto dim = j.at("dim").get<Eigen::Index>();
  const auto k = static_cast<Eigen::Index>(o.intents.size());
  const auto w = j.at("weights").get<std::vector<double>>();
  const auto b = j.at("bias").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(w.size()) != k * dim || static_cast<Eigen::Index>(b.size()) != k) {
    throw FormatError("oracle classifier: weight shapes do not match the intent list");
  }
  o.weights = Eigen::Map<const Eigen::MatrixXd>(w.data(), k, dim);
  o.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), k);
  o.iterations = j.value("iterations", 0);
  o.final_loss = j.value("final_loss", 0.0);
}

inline OracleClassifier train_oracle(const Dataset& reference, const EmbeddingTable& table,
                                     const OracleTrainingOptions& opt = {}) {
  if (reference.intents.size() < 2) throw ValidationError("train_oracle: need at least two intents");
  const auto n = static_cast<Eigen::Index>(reference.size());
  const auto k = static_cast<Eigen::Index>(reference.intents.size());
  const Eigen::Index dim = table.dim();

  Eigen::MatrixXd x(dim, n);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(k, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.col(i) = embed_sentence(reference.patterns[static_cast<std::size_t>(i)], table).vector;
    y(static_cast<Eigen::Index>(reference.intent_index(reference.utterances[static_cast<std::size_t>(i)].intent)),
      i) = 1.0;
  }
  const Eigen::VectorXd mean = x.rowwise().mean();
  Eigen::VectorXd scale = ((x.colwise() - mean).array().square().rowwise().mean()).sqrt().matrix();
  for (Eigen::Index d = 0; d < dim; ++d) {
    if (!(scale[d] > 1e-12)) scale[d] = 1.0;
  }
  const Eigen::MatrixXd xs = (x.colwise() - mean).array().colwise() / scale.array();

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(k, dim);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
  double prev = std::numeric_limits<double>::infinity();
  int flat = 0, it = 0;
  double loss = 0.0;
  for (; it < opt.max_iterations; ++it) {
    Eigen::MatrixXd s = (w * xs).colwise() + b;
    const Eigen::RowVectorXd peak = s.colwise().maxCoeff();
    s.rowwise() -= peak;
    Eigen::MatrixXd p = s.array().exp();
    const Eigen::RowVectorXd z = p.colwise().sum();
    p.array().rowwise() /= z.array();
    loss = -(y.array() * (s.array().rowwise() - z.array().log())).sum() / static_cast<double>(n) +
           0.5 * opt.l2 * w.squaredNorm();
    const double rel = std::abs(prev - loss) / std::max(1.0, std::abs(loss));
    flat = rel < opt.tolerance ? flat + 1 : 0;
    if (flat >= opt.patience) break;
    prev = loss;
    const Eigen::MatrixXd g = (p - y) / static_cast<double>(n);
    w -= opt.learning_rate * (g * xs.transpose() + opt.l2 * w);
    b -= opt.learning_rate * g.rowwise().sum();
  }

  OracleClassifier o;
  o.intents = reference.intents;
  o.weights = w.array().rowwise() / scale.transpose().array();
  o.bias = b - o.weights * mean;
  o.iterations = it;
  o.final_loss = loss;
  return o;
}

inline std::string classify_intent(const OracleClassifier& oracle, const Pattern& pattern,
                                   const EmbeddingTable& table) {
  return oracle.intents.at(oracle.classify_index(pattern, table));
}

/// Fraction of `dataset` whose label the oracle reproduces.
inline double oracle_accuracy(const OracleClassifier& oracle, const Dataset& dataset, const EmbeddingTable& table) {
  if (dataset.empty()) throw ValidationError("oracle_accuracy: empty dataset");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (classify_intent(oracle, dataset.patterns[i], table) == dataset.utterances[i].intent) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(dataset.size());
}

// ---------------------------------------------------------------------------
// Generation report

struct IntentMetrics {
  std::string intent;
  std::size_t generated = 0;
  std::size_t agreeing = 0;
  double conditioning_accuracy = 0.0;
  std::optional<double> bleu_quality;
  std::optional<double> bleu_diversity;  // missing below two agreeing sentences
  std::optional<double> originality;
};

struct SentenceAudit {
  std::string sentence;
  std::string conditioned_intent;
  std::string oracle_intent;
  bool agrees = false;
  std::optional<double> bleu_quality;
  std::optional<double> self_bleu;
  std::optional<bool> original;
};

struct AggregateMetrics {
  double conditioning_accuracy = 0.0;  // micro average over all sentences
  std::optional<double> bleu_quality;
  std::optional<double> bleu_diversity;
  std::optional<double> originality;
};

struct GenerationReport {
  std::vector<IntentMetrics> per_intent;
  AggregateMetrics aggregate;
  std::vector<SentenceAudit> audit;

  /// Aggregate values in the fixed order used by summaries and selection.
  static constexpr std::array<const char*, 4> kMetricNames{"conditioning_accuracy", "bleu_quality",
                                                           "bleu_diversity", "originality"};

  std::optional<double> metric(std::string_view name) const {
    if (name == "conditioning_accuracy") return aggregate.conditioning_accuracy;
    if (name == "bleu_quality") return aggregate.bleu_quality;
    if (name == "bleu_diversity") return aggregate.bleu_diversity;
    if (name == "originality") return aggregate.originality;
    throw ValidationError("unknown metric '" + std::string(name) + "'");
  }
};

/// `generated` maps a conditioning intent to its generated patterns;
/// `reference` supplies per-intent BLEU references and `training_patterns`
/// the set originality is measured against.
inline GenerationReport evaluate_generation(const std::map<std::string, std::vector<Pattern>>& generated,
                                            const Dataset& reference,
                                            const std::unordered_set<Pattern, PatternHash>& training_patterns,
                                            const OracleClassifier& oracle, const EmbeddingTable& table) {
  GenerationReport report;
  std::size_t total = 0, total_agree = 0;
  double q_sum = 0, q_w = 0, d_sum = 0, d_w = 0, o_sum = 0, o_w = 0;

  for (const auto& [intent, sentences] : generated) {
    if (!std::binary_search(reference.intents.begin(), reference.intents.end(), intent)) {
      throw ValidationError("evaluate_generation: intent '" + intent + "' absent from the reference dataset");
    }
    IntentMetrics im;
    im.intent = intent;
    im.generated = sentences.size();

    std::vector<std::size_t> agree_idx;
    const std::size_t audit_base = report.audit.size();
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      SentenceAudit a;
      a.sentence = sentences[i].joined();
      a.conditioned_intent = intent;
      a.oracle_intent = classify_intent(oracle, sentences[i], table);
      a.agrees = a.oracle_intent == intent;
      if (a.agrees) agree_idx.push_back(i);
      report.audit.push_back(std::move(a));
    }
    im.agreeing = agree_idx.size();
    im.conditioning_accuracy =
        sentences.empty() ? 0.0 : static_cast<double>(im.agreeing) / static_cast<double>(sentences.size());
    total += im.generated;
    total_agree += im.agreeing;

    if (!agree_idx.empty()) {
      std::vector<Pattern> refs;
      for (auto i : reference.indices_of(intent)) refs.push_back(reference.patterns[i]);
      const BleuReference ref_side(refs);
      std::vector<Pattern> agreeing;
      for (auto i : agree_idx) agreeing.push_back(sentences[i]);

      double q = 0;
      std::size_t novel = 0;
      for (std::size_t k = 0; k < agreeing.size(); ++k) {
        auto& a = report.audit[audit_base + agree_idx[k]];
        a.bleu_quality = ref_side.score(agreeing[k]);
        q += *a.bleu_quality;
        a.original = !training_patterns.contains(agreeing[k]);
        if (*a.original) ++novel;
      }
      const double na = static_cast<double>(agreeing.size());
      im.bleu_quality = q / na;
      im.originality = static_cast<double>(novel) / na;
      q_sum += *im.bleu_quality * na;
      q_w += na;
      o_sum += *im.originality * na;
      o_w += na;

      if (agreeing.size() >= 2) {
        const auto sb = self_bleu_scores(agreeing);
        double s = 0;
        for (std::size_t k = 0; k < sb.size(); ++k) {
          report.audit[audit_base + agree_idx[k]].self_bleu = sb[k];
          s += sb[k];
        }
        im.bleu_diversity = 1.0 - s / na;
        d_sum += *im.bleu_diversity * na;
        d_w += na;
      }
    }
    report.per_intent.push_back(std::move(im));
  }

  report.aggregate.conditioning_accuracy =
      total == 0 ? 0.0 : static_cast<double>(total_agree) / static_cast<double>(total);
  if (q_w > 0) report.aggregate.bleu_quality = q_sum / q_w;
  if (d_w > 0) report.aggregate.bleu_diversity = d_sum / d_w;
  if (o_w > 0) report.aggregate.originality = o_sum / o_w;
  return report;
}

namespace detail {

inline std::string opt_cell(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream ss;
  ss.precision(10);
  ss << *v;
  return ss.str();
}

inline nlohmann::json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace detail

/// Rows: one per intent plus an "ALL" aggregate. Empty cells mark missing values.
inline void write_report_csv(const GenerationReport& r, std::ostream& out) {
  out << "intent,generated,agreeing,conditioning_accuracy,bleu_quality,bleu_diversity,originality\n";
  out.precision(10);
  for (const auto& m : r.per_intent) {
    out << csv_escape(m.intent) << ',' << m.generated << ',' << m.agreeing << ',' << m.conditioning_accuracy << ','
        << detail::opt_cell(m.bleu_quality) << ',' << detail::opt_cell(m.bleu_diversity) << ','
        << detail::opt_cell(m.originality) << '\n';
  }
  std::size_t g = 0, a = 0;
  for (const auto& m : r.per_intent) {
    g += m.generated;
    a += m.agreeing;
  }
  out << "ALL," << g << ',' << a << ',' << r.aggregate.conditioning_accuracy << ','
      << detail::opt_cell(r.aggregate.bleu_quality) << ',' << detail::opt_cell(r.aggregate.bleu_diversity) << ','
      << detail::opt_cell(r.aggregate.originality) << '\n';
}

inline nlohmann::ordered_json report_to_json(const GenerationReport& r) {
  nlohmann::ordered_json j;
  j["conditioning_accuracy_averaging"] = "micro";
  nlohmann::ordered_json agg;
  agg["conditioning_accuracy"] = r.aggregate.conditioning_accuracy;
  agg["bleu_quality"] = detail::opt_json(r.aggregate.bleu_quality);
  agg["bleu_diversity"] = detail::opt_json(r.aggregate.bleu_diversity);
  agg["originality"] = detail::opt_json(r.aggregate.originality);
  j["aggregate"] = agg;
  nlohmann::ordered_json per = nlohmann::ordered_json::array();
  for (const auto& m : r.per_intent) {
    per.push_back({{"intent", m.intent},
                   {"generated", m.generated},
                   {"agreeing", m.agreeing},
                   {"conditioning_accuracy", m.conditioning_accuracy},
                   {"bleu_quality", detail::opt_json(m.bleu_quality)},
                   {"bleu_diversity", detail::opt_json(m.bleu_diversity)},
                   {"originality", detail::opt_json(m.originality)}});
  }
  j["per_intent"] = per;
  return j;
}

inline void write_audit_csv(const GenerationReport& r, std::ostream& out) {
  out << "sentence,conditioned_intent,oracle_intent,agrees,bleu_quality,self_bleu,original\n";
  for (const auto& a : r.audit) {
    out << csv_escape(a.sentence) << ',' << csv_escape(a.conditioned_intent) << ','
        << csv_escape(a.oracle_intent) << ',' << (a.agrees ? 1 : 0) << ',' << detail::opt_cell(a.bleu_quality)
        << ',' << detail::opt_cell(a.self_bleu) << ',' << (a.original ? (*a.original ? "1" : "0") : "") << '\n';
  }
}

}  // namespace cvaegen
