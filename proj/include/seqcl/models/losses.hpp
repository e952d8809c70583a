// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "seqcl/core/tape.hpp"
#include "seqcl/data/copy_task.hpp"

namespace seqcl::models {

namespace detail {

inline ad::Var accumulate_sum(ad::Var total, ad::Var term) { return total.valid() ? ad::add(total, term) : term; }

inline ad::Var zero_scalar(ad::Tape& tape) { return tape.constant(Mat::Zero(1, 1)); }

}  // namespace detail

/// Weighted BCE summed over time for per-step logits (B x F), targets and weights.
/// Steps whose logits were not computed must carry zero weight.
inline ad::Var seq_bce_loss(ad::Tape& tape, const std::vector<ad::Var>& logits, const std::vector<Mat>& y,
                            const std::vector<Mat>& w) {
  SEQCL_CHECK(logits.size() == y.size() && y.size() == w.size(), "seq_bce_loss: sequence length mismatch");
  ad::Var total;
  for (std::size_t t = 0; t < logits.size(); ++t) {
    if ((w[t].array() == 0.0).all()) continue;
    SEQCL_CHECK(logits[t].valid(), "seq_bce_loss: weighted step has no logits");
    total = detail::accumulate_sum(total, ad::bce_with_logits(logits[t], y[t], w[t]));
  }
  return total.valid() ? total : detail::zero_scalar(tape);
}

/// Single-sample form: logits is a T x F_out node.
inline ad::Var seq_bce_loss(ad::Var logits, const data::Sample& s) {
  return ad::bce_with_logits(logits, s.y, s.loss_weight);
}

/// Per-timestep cross-entropy, labels 0-based in [0, C): sum_t w_t * -log softmax(z_t)[label_t].
/// logits is T x C.
inline ad::Var seq_xent_loss(ad::Var logits, const std::vector<int>& labels, const std::vector<double>& weights) {
  return ad::softmax_xent(logits, labels, weights);
}

inline ad::Var batch_bce_loss(ad::Tape& tape, const std::vector<ad::Var>& logits, const data::Batch& b) {
  return seq_bce_loss(tape, logits, b.y, b.w);
}

}  // namespace seqcl::models
