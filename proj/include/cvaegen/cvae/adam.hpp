// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>

#include "cvaegen/cvae/params.hpp"

namespace cvaegen::cvae {

template <typename Real>
struct AdamState {
  CvaeParams<Real> first_moment;
  CvaeParams<Real> second_moment;
  long step = 0;

  static AdamState zeros_like(const CvaeParams<Real>& p) { return {p.zeros_like(), p.zeros_like(), 0}; }
};

struct AdamHyper {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// In-place bias-corrected Adam update.
template <typename Real>
void adam_step(CvaeParams<Real>& params, const CvaeParams<Real>& grads, AdamState<Real>& state, const AdamHyper& h) {
  ++state.step;
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));
  const Real b1 = static_cast<Real>(h.beta1), b2 = static_cast<Real>(h.beta2);
  const Real step_size = static_cast<Real>(h.lr / c1);
  const Real inv_sqrt_c2 = static_cast<Real>(1.0 / std::sqrt(c2));
  const Real eps = static_cast<Real>(h.eps);
  auto p = params.blocks();
  auto g = grads.blocks();
  auto m = state.first_moment.blocks();
  auto v = state.second_moment.blocks();
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto ga = g[i].second->array();
    auto ma = m[i].second->array();
    auto va = v[i].second->array();
    ma = b1 * ma + (Real(1) - b1) * ga;
    va = b2 * va + (Real(1) - b2) * ga.square();
    p[i].second->array() -= step_size * ma / (va.sqrt() * inv_sqrt_c2 + eps);
  }
}

/// Scales gradients so their global L2 norm is at most max_norm; returns the
/// norm before scaling.
template <typename Real>
double clip_global_norm(CvaeParams<Real>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, m] : grads.blocks()) sq += static_cast<double>(m->squaredNorm());
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const Real scale = static_cast<Real>(max_norm / norm);
    for (auto& [name, m] : grads.blocks()) *m *= scale;
  }
  return norm;
}

}  // namespace cvaegen::cvae
