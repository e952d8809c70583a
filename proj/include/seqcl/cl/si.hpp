// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "seqcl/core/param_vector.hpp"

namespace seqcl::cl {

/// Consolidation denominator for the path integral.
///   abs:     |dpsi| + eps   (default; keeps Omega >= 0 whatever the sign of dpsi)
///   signed:  dpsi + eps
///   squared: dpsi^2 + eps
enum class SiDenominator { abs, signed_, squared };

inline SiDenominator parse_si_denominator(const std::string& s) {
  if (s == "abs") return SiDenominator::abs;
  if (s == "signed") return SiDenominator::signed_;
  if (s == "squared") return SiDenominator::squared;
  throw ConfigError("unknown SI denominator '" + s + "' (expected abs, signed or squared)");
}

struct SiState {
  Vec omega;        // running importance of the current task
  Vec big_omega;    // consolidated importance
  Vec task_start;   // psi at the start of the current task
  Vec anchor;       // psi at the end of the previous task
  double eps = 1e-3;
  double lambda = 1.0;
  SiDenominator denominator = SiDenominator::abs;
  int tasks_seen = 0;

  SiState() = default;
  SiState(const Vec& psi0, double lam, double epsilon = 1e-3, SiDenominator d = SiDenominator::abs)
      : omega(Vec::Zero(psi0.size())),
        big_omega(Vec::Zero(psi0.size())),
        task_start(psi0),
        anchor(psi0),
        eps(epsilon),
        lambda(lam),
        denominator(d) {}

  [[nodiscard]] bool active() const { return tasks_seen > 0; }
};

/// omega <- omega - dpsi * dL_task/dpsi, with dpsi the optimizer step of the task loss alone.
inline void si_track_step(SiState& s, const Vec& grad_task, const Vec& delta) {
  SEQCL_CHECK(grad_task.size() == s.omega.size() && delta.size() == s.omega.size(),
              "si_track_step: length mismatch");
  s.omega.array() -= delta.array() * grad_task.array();
}

inline void si_begin_task(SiState& s, const Vec& psi) {
  SEQCL_CHECK(psi.size() == s.omega.size(), "si_begin_task: length mismatch");
  s.omega.setZero();
  s.task_start = psi;
}

/// Omega <- Omega + max(omega, 0) / denom(psi_end - psi_start), then a fresh running estimate.
inline void si_consolidate(SiState& s, const Vec& psi_end) {
  SEQCL_CHECK(psi_end.size() == s.omega.size(), "si_consolidate: length mismatch");
  const Eigen::ArrayXd d = (psi_end - s.task_start).array();
  Eigen::ArrayXd denom;
  switch (s.denominator) {
    case SiDenominator::abs: denom = d.abs() + s.eps; break;
    case SiDenominator::signed_: denom = d + s.eps; break;
    case SiDenominator::squared: denom = d.square() + s.eps; break;
  }
  s.big_omega.array() += s.omega.array().max(0.0) / denom;
  s.omega.setZero();
  s.task_start = psi_end;
  s.anchor = psi_end;
  s.tasks_seen += 1;
}

/// lambda * sum_i Omega_i (psi_i - psi~_i)^2
inline ad::Var si_penalty(ad::Var psi, const SiState& s) {
  SEQCL_CHECK(psi.cols() == 1 && psi.rows() == s.big_omega.size(), "si_penalty: parameter length mismatch");
  return ad::weighted_sq_dist(psi, as_column(s.anchor), as_column(Vec(s.lambda * s.big_omega)));
}

}  // namespace seqcl::cl
