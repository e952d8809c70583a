// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>

#include "seqcl/core/param_vector.hpp"

namespace seqcl::cl {

/// Online EWC with gamma_F = 1: a running sum of diagonal Fishers and the last MAP anchor.
struct EwcState {
  Vec fisher;  // >= 0, accumulated over tasks
  Vec anchor;  // psi~ after the most recent task
  double lambda = 1.0;
  int tasks_seen = 0;

  EwcState() = default;
  EwcState(Eigen::Index n, double lam) : fisher(Vec::Zero(n)), anchor(Vec::Zero(n)), lambda(lam) {}

  [[nodiscard]] bool active() const { return tasks_seen > 0; }
};

/// Per-sample gradient of -log p(y_n | psi); n runs over [0, n_samples).
using SampleGradFn = std::function<Vec(int)>;

/// F_ii = 1/N sum_n g_n,i^2 (empirical Fisher).
inline Vec empirical_fisher(const SampleGradFn& grad_of_sample, int n_samples) {
  SEQCL_CHECK(n_samples > 0, "ewc: Fisher needs at least one sample");
  Vec f;
  for (int n = 0; n < n_samples; ++n) {
    const Vec g = grad_of_sample(n);
    if (f.size() == 0) f = Vec::Zero(g.size());
    SEQCL_CHECK(g.size() == f.size(), "ewc: per-sample gradients differ in length");
    f.array() += g.array().square();
  }
  return f / static_cast<double>(n_samples);
}

/// F <- F + F_k and psi~ <- psi, at the end of a task.
inline void ewc_accumulate(EwcState& s, const Vec& fisher_k, const Vec& psi) {
  SEQCL_CHECK(fisher_k.size() == s.fisher.size() && psi.size() == s.anchor.size(), "ewc: length mismatch");
  s.fisher += fisher_k;
  s.anchor = psi;
  s.tasks_seen += 1;
}

inline void ewc_accumulate_fisher(EwcState& s, const SampleGradFn& grad_of_sample, int n_samples, const Vec& psi) {
  ewc_accumulate(s, empirical_fisher(grad_of_sample, n_samples), psi);
}

/// lambda * sum_i F_ii (psi_i - psi~_i)^2 for a column node holding the protected entries.
inline ad::Var ewc_penalty(ad::Var psi, const EwcState& s) {
  SEQCL_CHECK(psi.cols() == 1 && psi.rows() == s.fisher.size(), "ewc_penalty: parameter length mismatch");
  return ad::weighted_sq_dist(psi, as_column(s.anchor), as_column(Vec(s.lambda * s.fisher)));
}

}  // namespace seqcl::cl
