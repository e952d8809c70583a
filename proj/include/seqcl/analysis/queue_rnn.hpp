// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Hand-built linear RNN that solves the basic Copy Task with a queue.
//
// Hidden layout: p + 1 slots of F_out units, then one stop unit.
//   W_xh   copies the pattern bits into slot 0 and the stop flag into the stop unit.
//   W_hh   rotates slot j into slot (j + 1) mod (p + 1); the stop unit latches itself.
//   W_hy   reads slot 0 (the exit slot) as 2 * bit - stop.
// A pattern row written at step t returns to slot 0 after exactly p + 1 steps, which is the
// delay between pattern step m and recall step p + 1 + m. Pattern rows are the only nonzero
// bit inputs, so nothing else occupies the exit slot during recall. The latched stop unit
// supplies the -1 offset that turns {0, 1} into logits {-1, +1}.

#pragma once

#include <vector>

#include "seqcl/core/types.hpp"

namespace seqcl::analysis {

struct LinearRnn {
  Mat w_xh;  // n_h x F_in
  Mat w_hh;  // n_h x n_h
  Mat w_hy;  // F_out x n_h

  [[nodiscard]] Eigen::Index n_hidden() const { return w_hh.rows(); }
};

inline LinearRnn build_queue_copy_rnn(int p, int f_out) {
  SEQCL_CHECK(p >= 1 && f_out >= 1, "build_queue_copy_rnn: need p >= 1 and F_out >= 1");
  const int slots = p + 1;
  const int n_h = slots * f_out + 1;
  const int stop = n_h - 1;
  LinearRnn net;
  net.w_xh = Mat::Zero(n_h, f_out + 1);
  net.w_hh = Mat::Zero(n_h, n_h);
  net.w_hy = Mat::Zero(f_out, n_h);
  for (int f = 0; f < f_out; ++f) net.w_xh(f, f) = 1.0;
  net.w_xh(stop, f_out) = 1.0;
  for (int j = 0; j < slots; ++j) {
    const int to = (j + 1) % slots;
    for (int f = 0; f < f_out; ++f) net.w_hh(to * f_out + f, j * f_out + f) = 1.0;
  }
  net.w_hh(stop, stop) = 1.0;
  for (int f = 0; f < f_out; ++f) {
    net.w_hy(f, f) = 2.0;
    net.w_hy(f, stop) = -1.0;
  }
  return net;
}

/// Runs h_t = W_hh h_{t-1} + W_xh x_t, y_t = W_hy h_t from h_0 = 0 on a T x F_in input.
/// Returns the T x F_out outputs; `hidden` receives the T x n_h states when given.
inline Mat simulate_linear_rnn(const LinearRnn& net, const Mat& x, Mat* hidden = nullptr) {
  SEQCL_CHECK(x.cols() == net.w_xh.cols(), "simulate_linear_rnn: input width mismatch");
  Vec h = Vec::Zero(net.n_hidden());
  Mat y(x.rows(), net.w_hy.rows());
  if (hidden) hidden->resize(x.rows(), net.n_hidden());
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    h = net.w_hh * h + net.w_xh * x.row(t).transpose();
    y.row(t) = (net.w_hy * h).transpose();
    if (hidden) hidden->row(t) = h.transpose();
  }
  return y;
}

/// Recurrent block restricted to the slot units (everything but the stop unit).
inline Mat slot_block(const LinearRnn& net) {
  const Eigen::Index n = net.n_hidden() - 1;
  return net.w_hh.topLeftCorner(n, n);
}

}  // namespace seqcl::analysis
