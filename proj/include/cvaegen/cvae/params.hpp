// SPDX-License-Identifier: Apache-2.0
//
// Trainable tensors of the conditional autoencoder. Every tensor, biases
// included, is stored as a dense matrix so optimizers, gradient checks and
// serialization can walk the parameter set uniformly through blocks().

#pragma once

#include <array>
#include <cmath>
#include <string_view>
#include <type_traits>
#include <utility>

#include <Eigen/Dense>

#include "cvaegen/cvae/config.hpp"
#include "cvaegen/rng.hpp"

namespace cvaegen::cvae {

template <typename Real>
using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

/// One GRU layer; gate rows are stacked in the order reset, update, candidate.
template <typename Real>
struct GruWeights {
  Mat<Real> w_input;   // 3H x in
  Mat<Real> w_hidden;  // 3H x H
  Mat<Real> b_input;   // 3H x 1
  Mat<Real> b_hidden;  // 3H x 1
};

template <typename Real>
struct CvaeParams {
  Mat<Real> embedding;  // E x V, one column per token
  GruWeights<Real> encoder;
  Mat<Real> mu_w, mu_b;          // Z x H, Z x 1
  Mat<Real> logvar_w, logvar_b;  // Z x H, Z x 1
  Mat<Real> class_w, class_b;    // C x H, C x 1
  Mat<Real> init_w, init_b;      // H x (Z + C), H x 1
  GruWeights<Real> decoder;
  Mat<Real> out_w, out_b;  // V x H, V x 1

  static constexpr std::size_t kNumBlocks = 19;

  auto blocks() { return blocks_of(*this); }
  auto blocks() const { return blocks_of(*this); }

 private:
  template <typename Self>
  static auto blocks_of(Self& self) {
    using M = std::conditional_t<std::is_const_v<Self>, const Mat<Real>, Mat<Real>>;
    return std::array<std::pair<std::string_view, M*>, kNumBlocks>{{
        {"embedding", &self.embedding},
        {"encoder.w_input", &self.encoder.w_input},
        {"encoder.w_hidden", &self.encoder.w_hidden},
        {"encoder.b_input", &self.encoder.b_input},
        {"encoder.b_hidden", &self.encoder.b_hidden},
        {"mu_w", &self.mu_w},
        {"mu_b", &self.mu_b},
        {"logvar_w", &self.logvar_w},
        {"logvar_b", &self.logvar_b},
        {"class_w", &self.class_w},
        {"class_b", &self.class_b},
        {"init_w", &self.init_w},
        {"init_b", &self.init_b},
        {"decoder.w_input", &self.decoder.w_input},
        {"decoder.w_hidden", &self.decoder.w_hidden},
        {"decoder.b_input", &self.decoder.b_input},
        {"decoder.b_hidden", &self.decoder.b_hidden},
        {"out_w", &self.out_w},
        {"out_b", &self.out_b},
    }};
  }

 public:
  static CvaeParams zeros(const CvaeConfig& c) {
    const int v = c.vocab_size, e = c.embed_dim, h = c.hidden_dim, z = c.z_dim, k = c.n_classes;
    CvaeParams p;
    p.embedding = Mat<Real>::Zero(e, v);
    p.encoder = {Mat<Real>::Zero(3 * h, e), Mat<Real>::Zero(3 * h, h), Mat<Real>::Zero(3 * h, 1),
                 Mat<Real>::Zero(3 * h, 1)};
    p.mu_w = Mat<Real>::Zero(z, h);
    p.mu_b = Mat<Real>::Zero(z, 1);
    p.logvar_w = Mat<Real>::Zero(z, h);
    p.logvar_b = Mat<Real>::Zero(z, 1);
    p.class_w = Mat<Real>::Zero(k, h);
    p.class_b = Mat<Real>::Zero(k, 1);
    p.init_w = Mat<Real>::Zero(h, z + k);
    p.init_b = Mat<Real>::Zero(h, 1);
    p.decoder = {Mat<Real>::Zero(3 * h, e), Mat<Real>::Zero(3 * h, h), Mat<Real>::Zero(3 * h, 1),
                 Mat<Real>::Zero(3 * h, 1)};
    p.out_w = Mat<Real>::Zero(v, h);
    p.out_b = Mat<Real>::Zero(v, 1);
    return p;
  }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight matrix; a bias
  /// shares the bound of the weight it is added to. The embedding counts as a
  /// one-hot projection, so its fan-in is the vocabulary size.
  static CvaeParams initialize(const CvaeConfig& c, Rng& rng) {
    CvaeParams p = zeros(c);
    auto fill = [&rng](Mat<Real>& m, double fan_in) {
      const double bound = 1.0 / std::sqrt(fan_in);
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<Real>(rng.uniform(-bound, bound));
      }
    };
    const double e = c.embed_dim, h = c.hidden_dim, zc = c.z_dim + c.n_classes;
    fill(p.embedding, c.vocab_size);
    for (auto* g : {&p.encoder, &p.decoder}) {
      fill(g->w_input, e);
      fill(g->w_hidden, h);
      fill(g->b_input, e);
      fill(g->b_hidden, h);
    }
    fill(p.mu_w, h);
    fill(p.mu_b, h);
    fill(p.logvar_w, h);
    fill(p.logvar_b, h);
    fill(p.class_w, h);
    fill(p.class_b, h);
    fill(p.init_w, zc);
    fill(p.init_b, zc);
    fill(p.out_w, h);
    fill(p.out_b, h);
    return p;
  }

  CvaeParams zeros_like() const {
    CvaeParams p = *this;
    for (auto& [name, m] : p.blocks()) m->setZero();
    return p;
  }

  template <typename Other>
  CvaeParams<Other> cast() const {
    CvaeParams<Other> out;
    auto dst = out.blocks();
    auto src = blocks();
    for (std::size_t i = 0; i < src.size(); ++i) *dst[i].second = src[i].second->template cast<Other>();
    return out;
  }

  std::size_t num_parameters() const {
    std::size_t n = 0;
    for (const auto& [name, m] : blocks()) n += static_cast<std::size_t>(m->size());
    return n;
  }

  bool all_finite() const {
    for (const auto& [name, m] : blocks()) {
      if (!m->allFinite()) return false;
    }
    return true;
  }
};

}  // namespace cvaegen::cvae
