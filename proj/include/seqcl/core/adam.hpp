// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>

#include "seqcl/core/param_vector.hpp"

namespace seqcl {

struct AdamState {
  Vec m;
  Vec v;
  long t = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

inline AdamState make_adam(Eigen::Index n, double lr, double beta1 = 0.9, double beta2 = 0.999,
                           double eps = 1e-8) {
  return {Vec::Zero(n), Vec::Zero(n), 0, lr, beta1, beta2, eps};
}

/// 1.0 for entries the optimizer may touch, 0.0 for frozen ones. Empty means "all".
using TrainableMask = Eigen::ArrayXd;

namespace detail {

inline void adam_check(const ParamLayout& layout, const Vec& grads, const AdamState& s) {
  SEQCL_CHECK(grads.size() == layout.size(), "adam: gradient length " + std::to_string(grads.size()) +
                                                 " does not match parameter length " +
                                                 std::to_string(layout.size()));
  SEQCL_CHECK(s.m.size() == grads.size() && s.v.size() == grads.size(), "adam: state length mismatch");
  for (Eigen::Index i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i]))
      throw DivergenceError("seqcl: adam: non-finite gradient in view '" + layout.owner(i).name + "'");
  }
}

// Shared update; writes the step into `delta` and optionally advances the moments.
inline void adam_update(AdamState& s, const Vec& g, const TrainableMask& mask, Vec& delta) {
  const long t = s.t + 1;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(t));
  delta.setZero(g.size());
  const bool all = mask.size() == 0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (!all && mask[i] == 0.0) continue;
    const double m = s.beta1 * s.m[i] + (1.0 - s.beta1) * g[i];
    const double v = s.beta2 * s.v[i] + (1.0 - s.beta2) * g[i] * g[i];
    s.m[i] = m;
    s.v[i] = v;
    delta[i] = -s.lr * (m / c1) / (std::sqrt(v / c2) + s.eps);
  }
  s.t = t;
}

}  // namespace detail

/// Update that one Adam step would apply, without touching the state.
inline Vec adam_peek(const ParamLayout& layout, const Vec& grads, const AdamState& state,
                     const TrainableMask& mask = {}) {
  detail::adam_check(layout, grads, state);
  AdamState scratch = state;
  Vec delta;
  detail::adam_update(scratch, grads, mask, delta);
  return delta;
}

/// In-place bias-corrected Adam step. Frozen entries keep their value and moments.
/// Returns the applied update.
inline Vec adam_step(ParamVector& params, const Vec& grads, AdamState& state,
                     const TrainableMask& mask = {}) {
  detail::adam_check(params.layout(), grads, state);
  SEQCL_CHECK(mask.size() == 0 || mask.size() == grads.size(), "adam: mask length mismatch");
  Vec delta;
  detail::adam_update(state, grads, mask, delta);
  params.entries() += delta;
  return delta;
}

/// Rescales g so that its L2 norm is at most max_norm.
inline Vec clip_global_norm(Vec g, double max_norm) {
  SEQCL_CHECK(max_norm > 0.0, "clip_global_norm: max_norm must be positive");
  const double n = g.norm();
  if (n > max_norm) g *= max_norm / n;
  return g;
}

}  // namespace seqcl
