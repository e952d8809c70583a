// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>

#include "seqcl/core/rng.hpp"
#include "seqcl/core/tape.hpp"

namespace seqcl {

/// Orthogonal (square) or semi-orthogonal (rectangular) matrix from the QR factorization of a
/// standard-normal draw, with signs fixed so that diag(R) > 0.
inline Mat orthogonal_init(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  SEQCL_CHECK(rows >= 1 && cols >= 1, "orthogonal_init: dimensions must be positive");
  const Eigen::Index tall = std::max(rows, cols), wide = std::min(rows, cols);
  const Mat a = randn(tall, wide, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(tall, wide);
  const Eigen::MatrixXd r = qr.matrixQR();
  for (Eigen::Index j = 0; j < wide; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  Mat out = q;
  if (rows < cols) out = Mat(q.transpose());
  return out;
}

/// strength * ||W^T W - I||_F^2 for a square W.
inline double orthogonal_penalty(const Mat& w, double strength) {
  SEQCL_CHECK(w.rows() == w.cols(), "orthogonal_reg: W must be square, got " + shape_str(w));
  const Mat d = w.transpose() * w - Mat::Identity(w.rows(), w.cols());
  return strength * d.squaredNorm();
}

/// Differentiable counterpart of orthogonal_penalty.
inline ad::Var orthogonal_reg(ad::Var w, double strength) {
  SEQCL_CHECK(w.rows() == w.cols(), "orthogonal_reg: W must be square, got " + shape_str(w.value()));
  const Eigen::Index n = w.rows();
  const std::size_t iw = w.id();
  const Mat d = w.value().transpose() * w.value() - Mat::Identity(n, n);
  Mat out(1, 1);
  out(0, 0) = strength * d.squaredNorm();
  // d/dW ||W^T W - I||^2 = 4 W (W^T W - I)
  return w.tape().push(std::move(out), {iw}, [iw, strength, d](ad::Tape& t, std::size_t self) {
    const double g = t.node(self).grad(0, 0);
    t.accumulate(iw, 4.0 * strength * g * (t.value(iw) * d));
  });
}

}  // namespace seqcl
