// SPDX-License-Identifier: Apache-2.0
//
// Mini-batch training loop: seeded shuffling, logistic KL annealing on a
// global counter, Adam updates, and a per-step loss log.

#pragma once

#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cvaegen/cvae/adam.hpp"
#include "cvaegen/cvae/config.hpp"
#include "cvaegen/cvae/latent.hpp"
#include "cvaegen/cvae/model.hpp"
#include "cvaegen/cvae/params.hpp"
#include "cvaegen/embeddings.hpp"
#include "cvaegen/error.hpp"
#include "cvaegen/rng.hpp"
#include "cvaegen/transfer.hpp"

namespace cvaegen::cvae {

struct TrainingLogRow {
  long step = 0;
  int epoch = 0;
  LossBreakdown loss;
};

template <typename Real>
struct FitResult {
  CvaeParams<Real> params;
  std::vector<TrainingLogRow> log;
  int threads = 1;
};

inline double kl_weight_at(const CvaeConfig& c, long step, int epoch) {
  const double t = c.anneal_unit == AnnealUnit::kBatchSteps ? static_cast<double>(step) : static_cast<double>(epoch);
  return anneal_weight(t, c.t_kl, c.r_kl);
}

/// Overwrites embedding columns of tokens the table knows (pre-trained
/// vectors); other tokens keep their random initialization.
template <typename Real>
void load_pretrained_embeddings(CvaeParams<Real>& p, const Vocabulary& vocab, const EmbeddingTable& table) {
  if (table.dim() != p.embedding.rows()) throw ValidationError("embedding table dim differs from embed_dim");
  for (std::size_t id = Vocabulary::kNumSpecials; id < vocab.size(); ++id) {
    const auto& tok = vocab.tokens()[id];
    if (!table.has(tok)) continue;
    p.embedding.col(static_cast<Eigen::Index>(id)) = table.lookup(tok).template cast<Real>();
  }
}

inline void check_finite(const LossBreakdown& l, long step) {
  const std::pair<const char*, double> terms[] = {
      {"rec", l.rec}, {"kl_gauss", l.kl_gauss}, {"kl_cat", l.kl_cat}, {"cat", l.cat}, {"total", l.total}};
  for (const auto& [name, v] : terms) {
    if (!std::isfinite(v)) {
      throw DivergenceError("non-finite loss at step " + std::to_string(step) + ", term " + name);
    }
  }
}

/// Trains from a seeded initialization. Initial parameters come from
/// Rng::derive(seed, 0), batch order from stream 1 and latent noise from
/// stream 2, so identical inputs give bit-identical trajectories.
template <typename Real = float>
FitResult<Real> fit(CvaeConfig config, const LabeledMixture& mixture, const Vocabulary& vocab,
                    const EmbeddingTable* pretrained = nullptr) {
  if (mixture.examples.empty()) throw ValidationError("fit: empty mixture");
  config.vocab_size = static_cast<int>(vocab.size());
  config.n_classes = mixture.num_classes();
  config.validate();
  if (mixture.alpha.size() != static_cast<std::size_t>(config.n_classes)) {
    throw ValidationError("fit: alpha length differs from the number of classes");
  }
  for (const auto& ex : mixture.examples) {
    if (static_cast<int>(ex.ids.size()) != config.max_len) throw ValidationError("fit: sequence length != max_len");
  }

  Rng init_rng(Rng::derive(config.seed, 0));
  Rng order_rng(Rng::derive(config.seed, 1));
  Rng noise_rng(Rng::derive(config.seed, 2));

  FitResult<Real> result{CvaeParams<Real>::initialize(config, init_rng), {}, Eigen::nbThreads()};
  if (pretrained) load_pretrained_embeddings(result.params, vocab, *pretrained);
  auto adam = AdamState<Real>::zeros_like(result.params);
  const AdamHyper hyper{config.lr, config.adam_beta1, config.adam_beta2, config.adam_eps};
  const Real tau = static_cast<Real>(config.tau);

  const std::size_t n = mixture.examples.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  long step = 0;
  CvaeParams<Real> grads;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    order_rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(config.batch_size));
      std::vector<const std::vector<int>*> seqs;
      std::vector<int> classes;
      for (std::size_t k = start; k < end; ++k) {
        seqs.push_back(&mixture.examples[order[k]].ids);
        classes.push_back(mixture.examples[order[k]].class_index);
      }
      const Batch batch = Batch::from_sequences(seqs, classes);
      const auto noise = LatentNoise<Real>::draw(config.z_dim, config.n_classes, batch.size(), noise_rng);
      const double gamma = kl_weight_at(config, step, epoch);
      const LossBreakdown loss = evaluate_batch<Real>(result.params, batch, mixture.alpha, gamma, tau, noise, &grads);
      check_finite(loss, step);
      if (config.clip_norm > 0.0) clip_global_norm(grads, config.clip_norm);
      adam_step(result.params, grads, adam, hyper);
      result.log.push_back({step, epoch, loss});
      ++step;
    }
  }
  return result;
}

inline void write_training_log_csv(const std::vector<TrainingLogRow>& log, std::ostream& out) {
  out << "step,epoch,rec,kl_gauss,kl_cat,cat,gamma,total\n";
  out.precision(9);
  for (const auto& r : log) {
    out << r.step << ',' << r.epoch << ',' << r.loss.rec << ',' << r.loss.kl_gauss << ',' << r.loss.kl_cat << ','
        << r.loss.cat << ',' << r.loss.gamma << ',' << r.loss.total << '\n';
  }
}

}  // namespace cvaegen::cvae
