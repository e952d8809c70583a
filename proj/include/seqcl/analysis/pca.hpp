// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <vector>

#include "seqcl/core/types.hpp"

namespace seqcl::analysis {

/// Variances along the principal axes of the rows of H, largest first.
inline Vec principal_variances(const Mat& h) {
  SEQCL_CHECK(h.rows() >= 2, "pca: need at least two samples");
  const Eigen::MatrixXd c = h.rowwise() - h.colwise().mean();
  const double denom = static_cast<double>(h.rows() - 1);
  Vec ev;
  if (h.rows() >= h.cols()) {
    const Eigen::MatrixXd cov = (c.transpose() * c) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
    ev = es.eigenvalues().reverse();
  } else {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(c);
    ev = svd.singularValues().array().square() / denom;
  }
  return ev.cwiseMax(0.0);
}

/// Smallest d whose leading d components explain at least `threshold` of the variance.
/// Constant data has dimension 0.
inline int pca_intrinsic_dim(const Mat& h, double threshold = 0.75) {
  SEQCL_CHECK(threshold > 0.0 && threshold <= 1.0, "pca: threshold must lie in (0, 1]");
  const Vec ev = principal_variances(h);
  const double total = ev.sum();
  const double scale = std::max(1.0, h.squaredNorm() / static_cast<double>(h.rows()));
  if (total <= 1e-20 * scale) return 0;
  double acc = 0.0;
  for (Eigen::Index d = 0; d < ev.size(); ++d) {
    acc += ev[d];
    if (acc / total >= threshold - 1e-12) return static_cast<int>(d + 1);
  }
  return static_cast<int>(ev.size());
}

/// Intrinsic dimension at every step of a time-major trace (each entry N x n_h).
inline std::vector<int> intrinsic_dim_per_step(const std::vector<Mat>& trace, double threshold = 0.75) {
  std::vector<int> out;
  out.reserve(trace.size());
  for (const auto& h : trace) out.push_back(pca_intrinsic_dim(h, threshold));
  return out;
}

}  // namespace seqcl::analysis
