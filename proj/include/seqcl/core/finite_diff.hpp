// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "seqcl/core/param_vector.hpp"
#include "seqcl/core/tape.hpp"

namespace seqcl {

/// Builds a scalar loss on `tape` from the flat parameter leaf.
using LossBuilder = std::function<ad::Var(ad::Tape&, ad::Var)>;

struct FiniteDiffResult {
  double max_rel_error = 0.0;
  Eigen::Index worst_index = -1;
  Vec analytic;
  Vec numeric;
};

inline double eval_loss(const LossBuilder& f, const Vec& params) {
  ad::Tape tape;
  const ad::Var p = tape.leaf("params", as_column(params));
  const double v = f(tape, p).scalar();
  if (!std::isfinite(v)) throw Error("seqcl: finite_diff_check: non-finite loss evaluation");
  return v;
}

inline Vec analytic_grad(const LossBuilder& f, const Vec& params) {
  ad::Tape tape;
  const ad::Var p = tape.leaf("params", as_column(params));
  tape.backward(f(tape, p));
  return as_vec(p.grad());
}

/// Compares the tape gradient with central differences; error per entry is
/// |g - g_num| / max(1, |g|, |g_num|).
inline FiniteDiffResult finite_diff_check(const LossBuilder& f, const Vec& params, double step) {
  SEQCL_CHECK(step > 0.0, "finite_diff_check: step must be positive");
  FiniteDiffResult r;
  r.analytic = analytic_grad(f, params);
  r.numeric.resize(params.size());
  Vec x = params;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    x[i] = params[i] + step;
    const double up = eval_loss(f, x);
    x[i] = params[i] - step;
    const double down = eval_loss(f, x);
    x[i] = params[i];
    r.numeric[i] = (up - down) / (2.0 * step);
    const double g = r.analytic[i], n = r.numeric[i];
    const double err = std::abs(g - n) / std::max({1.0, std::abs(g), std::abs(n)});
    if (err > r.max_rel_error || r.worst_index < 0) {
      r.max_rel_error = std::max(r.max_rel_error, err);
      if (err >= r.max_rel_error) r.worst_index = i;
    }
  }
  return r;
}

}  // namespace seqcl
