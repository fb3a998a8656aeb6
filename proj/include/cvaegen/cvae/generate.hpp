// SPDX-License-Identifier: Apache-2.0
//
// Conditioned greedy generation: z ~ N(0, I), a one-hot class code, then the
// arg-max token at every decoder step until EOS or max_len.

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cvaegen/corpus.hpp"
#include "cvaegen/cvae/model.hpp"
#include "cvaegen/cvae/params.hpp"
#include "cvaegen/error.hpp"
#include "cvaegen/rng.hpp"

namespace cvaegen::cvae {

/// Called once per decoder step with the V x n output distribution.
template <typename Real>
using StepObserver = std::function<void(const Mat<Real>& probs)>;

/// Greedy decoding from explicit latent codes (z: Z x n, c: C x n). Returns
/// token ids per sample, EOS excluded; at most max_len - 2 tokens.
template <typename Real>
std::vector<std::vector<int>> greedy_decode(const CvaeParams<Real>& p, const Mat<Real>& z, const Mat<Real>& c,
                                            int max_len, Real tau = Real(1),
                                            const StepObserver<Real>& observer = nullptr) {
  const Eigen::Index n = z.cols();
  const int zd = static_cast<int>(z.rows());
  std::vector<std::vector<int>> out(static_cast<std::size_t>(n));
  if (n == 0) return out;
  Mat<Real> s(zd + c.rows(), n);
  s.topRows(zd) = z;
  s.bottomRows(c.rows()) = c;
  Mat<Real> h = (p.init_w * s).colwise() + p.init_b.col(0);
  std::vector<int> prev(static_cast<std::size_t>(n), Vocabulary::kSos);
  std::vector<bool> done(static_cast<std::size_t>(n), false);
  const int max_tokens = std::max(0, max_len - 2);
  for (int t = 0; t <= max_tokens; ++t) {
    Mat<Real> x(p.embedding.rows(), n);
    for (Eigen::Index j = 0; j < n; ++j) x.col(j) = p.embedding.col(prev[static_cast<std::size_t>(j)]);
    Mat<Real> ax = p.decoder.w_input * x;
    ax.colwise() += p.decoder.b_input.col(0);
    h = detail::gru_step<Real>(p.decoder, ax, h, nullptr);
    Mat<Real> logits = (p.out_w * h).colwise() + p.out_b.col(0);
    logits /= tau;
    if (observer) {
      Mat<Real> probs, log_probs;
      detail::softmax_columns<Real>(logits, probs, log_probs);
      observer(probs);
    }
    bool all_done = true;
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      if (done[uj]) continue;
      Eigen::Index best;
      logits.col(j).maxCoeff(&best);  // first maximum on ties
      const int id = static_cast<int>(best);
      // The last step only decides between EOS and truncation.
      if (id == Vocabulary::kEos || id == Vocabulary::kPad || t == max_tokens) {
        done[uj] = true;
        continue;
      }
      if (id != Vocabulary::kSos) out[uj].push_back(id);
      prev[uj] = id;
      all_done = false;
    }
    if (all_done) break;
  }
  return out;
}

/// n conditioned samples for one class, decoded to patterns.
template <typename Real>
std::vector<Pattern> generate(const CvaeParams<Real>& p, const Vocabulary& vocab, int intent_index, int n,
                              std::uint64_t seed, int max_len, Real tau = Real(1)) {
  const int nc = static_cast<int>(p.class_w.rows());
  const int zd = static_cast<int>(p.mu_w.rows());
  if (intent_index < 0 || intent_index >= nc) {
    throw IndexError("generate: intent index " + std::to_string(intent_index) + " outside [0, " +
                     std::to_string(nc) + ")");
  }
  if (n <= 0) return {};
  Rng rng(seed);
  Mat<Real> z(zd, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < zd; ++i) z(i, j) = static_cast<Real>(rng.normal());
  }
  Mat<Real> c = Mat<Real>::Zero(nc, n);
  c.row(intent_index).setOnes();
  const auto ids = greedy_decode<Real>(p, z, c, max_len, tau);
  std::vector<Pattern> out;
  out.reserve(ids.size());
  for (const auto& seq : ids) {
    Pattern pat;
    for (int id : seq) pat.tokens.push_back(vocab.token(id));
    out.push_back(std::move(pat));
  }
  return out;
}

}  // namespace cvaegen::cvae
