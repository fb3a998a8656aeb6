// SPDX-License-Identifier: Apache-2.0
//
// Central finite differences over every parameter of a CvaeParams<double>,
// evaluated through the forward loss only. Independent of the reverse pass.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "cvaegen/cvae/params.hpp"

namespace cvaegen::testing {

struct BlockError {
  std::string name;
  double max_abs_diff = 0.0;
  double max_abs_grad = 0.0;
  /// max |analytic - numeric| / max(max |analytic|, max |numeric|) over the block.
  double relative = 0.0;
};

inline cvae::CvaeParams<double> numeric_gradient(const cvae::CvaeParams<double>& params,
                                                 const std::function<double(const cvae::CvaeParams<double>&)>& loss,
                                                 double h) {
  cvae::CvaeParams<double> probe = params;
  cvae::CvaeParams<double> grad = params.zeros_like();
  auto pb = probe.blocks();
  auto gb = grad.blocks();
  for (std::size_t b = 0; b < pb.size(); ++b) {
    auto& m = *pb[b].second;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double saved = m.data()[i];
      m.data()[i] = saved + h;
      const double up = loss(probe);
      m.data()[i] = saved - h;
      const double down = loss(probe);
      m.data()[i] = saved;
      gb[b].second->data()[i] = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

inline std::vector<BlockError> compare_gradients(const cvae::CvaeParams<double>& analytic,
                                                 const cvae::CvaeParams<double>& numeric) {
  std::vector<BlockError> out;
  auto a = analytic.blocks();
  auto n = numeric.blocks();
  for (std::size_t b = 0; b < a.size(); ++b) {
    BlockError e{std::string(a[b].first)};
    e.max_abs_diff = (*a[b].second - *n[b].second).cwiseAbs().maxCoeff();
    e.max_abs_grad = std::max(a[b].second->cwiseAbs().maxCoeff(), n[b].second->cwiseAbs().maxCoeff());
    e.relative = e.max_abs_grad > 0.0 ? e.max_abs_diff / e.max_abs_grad : e.max_abs_diff;
    out.push_back(e);
  }
  return out;
}

}  // namespace cvaegen::testing
