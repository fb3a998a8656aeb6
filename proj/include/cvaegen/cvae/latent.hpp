// SPDX-License-Identifier: Apache-2.0
//
// Latent-space primitives: reparameterized Gaussian and Gumbel-softmax
// samples, closed-form KL terms and the logistic KL-annealing schedule.

#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "cvaegen/error.hpp"

namespace cvaegen::cvae {

template <typename Real>
using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

/// Numerically stable softmax of a column vector.
template <typename Real>
Vec<Real> softmax(const Vec<Real>& logits) {
  const Real peak = logits.maxCoeff();
  Vec<Real> e = (logits.array() - peak).exp().matrix();
  return e / e.sum();
}

template <typename Real>
Vec<Real> log_softmax(const Vec<Real>& logits) {
  const Real peak = logits.maxCoeff();
  const Real lse = peak + std::log((logits.array() - peak).exp().sum());
  return (logits.array() - lse).matrix();
}

/// z = mu + exp(logvar / 2) * noise.
template <typename Real>
Vec<Real> sample_gaussian(const Vec<Real>& mu, const Vec<Real>& logvar, const Vec<Real>& noise) {
  if (mu.size() != logvar.size() || mu.size() != noise.size()) {
    throw ValidationError("sample_gaussian: shape mismatch");
  }
  return (mu.array() + (logvar.array() * Real(0.5)).exp() * noise.array()).matrix();
}

/// softmax((logits + g) / tau) with g_i = -log(-log u_i); u must lie in (0,1).
template <typename Real>
Vec<Real> sample_gumbel_softmax(const Vec<Real>& logits, Real tau, const Vec<Real>& uniform_noise) {
  if (!(tau > Real(0))) throw DomainError("sample_gumbel_softmax: tau must be > 0");
  if (logits.size() != uniform_noise.size()) throw ValidationError("sample_gumbel_softmax: shape mismatch");
  Vec<Real> y(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    const Real u = uniform_noise[i];
    if (!(u > Real(0) && u < Real(1))) throw DomainError("sample_gumbel_softmax: noise outside (0,1)");
    y[i] = (logits[i] - std::log(-std::log(u))) / tau;
  }
  return softmax<Real>(y);
}

/// KL(N(mu, exp(logvar)) || N(0, I)).
template <typename Real>
Real kl_gaussian(const Vec<Real>& mu, const Vec<Real>& logvar) {
  if (mu.size() != logvar.size()) throw ValidationError("kl_gaussian: shape mismatch");
  return Real(0.5) * (mu.array().square() + logvar.array().exp() - logvar.array() - Real(1)).sum();
}

/// KL(q || uniform over C classes) = sum_i q_i log(q_i C), with 0 log 0 = 0.
template <typename Real>
Real kl_categorical_uniform(const Vec<Real>& probs) {
  const Real c = static_cast<Real>(probs.size());
  Real kl = 0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs[i] > Real(0)) kl += probs[i] * std::log(probs[i] * c);
  }
  return kl;
}

/// Logistic KL weight 1 / (1 + exp(-r_kl (step - t_kl))).
inline double anneal_weight(double step, double t_kl, double r_kl) {
  const double x = -r_kl * (step - t_kl);
  if (x > 700.0) return 0.0;
  return 1.0 / (1.0 + std::exp(x));
}

}  // namespace cvaegen::cvae
