// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Linear-RNN subspace picture: each task k keeps its hidden content in a subspace S_k
// spanned by the orthonormal columns of U_k. With U = [U_1 ... U_K U~] orthogonal and
// W_hh = U Q U^T, a block-diagonal Q maps every S_k into itself.

#pragma once

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "seqcl/core/rng.hpp"

namespace seqcl::analysis {

/// Right-singular directions of a head (rows are outputs) with sigma >= threshold * sigma_max,
/// returned as an r x n_h matrix with orthonormal rows.
inline Mat head_subspace(const Mat& head, double threshold = 0.05) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(head), Eigen::ComputeFullV);
  const Vec& s = svd.singularValues();
  if (s.size() == 0 || s[0] <= 0.0) return Mat(0, head.cols());
  Eigen::Index r = 0;
  while (r < s.size() && s[r] >= threshold * s[0]) ++r;
  return svd.matrixV().leftCols(r).transpose();
}

/// ||U_k U_l^T||_F for the thresholded head subspaces.
inline double head_subspace_similarity(const Mat& head_k, const Mat& head_l, double threshold = 0.05) {
  SEQCL_CHECK(head_k.cols() == head_l.cols(), "head_subspace_similarity: heads read different hidden sizes");
  const Mat uk = head_subspace(head_k, threshold), ul = head_subspace(head_l, threshold);
  if (uk.rows() == 0 || ul.rows() == 0) return 0.0;
  return (uk * ul.transpose()).norm();
}

inline void check_orthonormal(const Mat& u, double tol = 1e-8) {
  const Mat g = u.transpose() * u;
  SEQCL_CHECK((g - Mat::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff() <= tol,
              "subspace basis columns are not orthonormal");
}

/// K mutually orthogonal bases of the given dimensions, from one random orthogonal matrix.
inline std::vector<Mat> random_orthogonal_bases(int n_h, const std::vector<int>& dims, Rng& rng) {
  int total = 0;
  for (int p : dims) {
    SEQCL_CHECK(p >= 1, "subspace dimensions must be >= 1");
    total += p;
  }
  SEQCL_CHECK(total <= n_h, "sum of subspace dimensions exceeds n_h");
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd(randn(n_h, n_h, rng)));
  const Mat q = Eigen::MatrixXd(qr.householderQ());
  std::vector<Mat> out;
  int off = 0;
  for (int p : dims) {
    out.push_back(q.middleCols(off, p));
    off += p;
  }
  return out;
}

using OffBlocks = std::map<std::pair<int, int>, Mat>;  // (to l, from k) -> Q_lk, p_l x p_k

/// W_hh = sum_k U_k Q_kk U_k^T + sum_(l,k) U_l Q_lk U_k^T; zero on the complement.
inline Mat build_subspace_rnn(const std::vector<Mat>& bases, const std::vector<Mat>& blocks,
                              const OffBlocks& off_blocks = {}) {
  SEQCL_CHECK(!bases.empty(), "build_subspace_rnn: no subspaces");
  SEQCL_CHECK(blocks.size() == bases.size(), "build_subspace_rnn: one diagonal block per subspace required");
  const Eigen::Index n_h = bases.front().rows();
  Eigen::Index total = 0;
  for (const auto& u : bases) {
    SEQCL_CHECK(u.rows() == n_h, "build_subspace_rnn: bases live in different spaces");
    total += u.cols();
  }
  if (total > n_h)
    throw Error("seqcl: build_subspace_rnn: sum of subspace dimensions " + std::to_string(total) +
                " exceeds n_h = " + std::to_string(n_h) + "; mutually orthogonal subspaces are impossible");
  Mat all(n_h, total);
  Eigen::Index off = 0;
  for (const auto& u : bases) {
    all.middleCols(off, u.cols()) = u;
    off += u.cols();
  }
  check_orthonormal(all);
  Mat w = Mat::Zero(n_h, n_h);
  for (std::size_t k = 0; k < bases.size(); ++k) {
    const Mat& u = bases[k];
    SEQCL_CHECK(blocks[k].rows() == u.cols() && blocks[k].cols() == u.cols(), "build_subspace_rnn: block shape mismatch");
    w += u * blocks[k] * u.transpose();
  }
  for (const auto& [lk, q] : off_blocks) {
    const auto [l, k] = lk;
    SEQCL_CHECK(l >= 0 && k >= 0 && l < static_cast<int>(bases.size()) && k < static_cast<int>(bases.size()) && l != k,
                "build_subspace_rnn: off-block index out of range");
    const Mat& ul = bases[static_cast<std::size_t>(l)];
    const Mat& uk = bases[static_cast<std::size_t>(k)];
    SEQCL_CHECK(q.rows() == ul.cols() && q.cols() == uk.cols(), "build_subspace_rnn: off-block shape mismatch");
    w += ul * q * uk.transpose();
  }
  return w;
}

/// ||(I - U U^T) W U||_F: how much of S_k the recurrence pushes out of S_k.
inline double subspace_retention_error(const Mat& w_hh, const Mat& u) {
  SEQCL_CHECK(w_hh.rows() == w_hh.cols() && w_hh.cols() == u.rows(), "subspace_retention_error: shape mismatch");
  const Mat wu = w_hh * u;
  return (wu - u * (u.transpose() * wu)).norm();
}

/// ||U_to^T W U_from||_F: recurrent transfer from S_from into S_to.
inline double interference_measure(const Mat& w_hh, const Mat& u_from, const Mat& u_to) {
  return (u_to.transpose() * w_hh * u_from).norm();
}

struct InterferenceReport {
  bool feasible = true;        // sum p_k <= n_h
  int capacity = 0;            // n_h, the largest total orthogonal dimension
  int total_dim = 0;           // sum p_k
  std::vector<double> retention_errors;
  double max_overlap = 0.0;    // max_{k != l} ||U_k^T U_l||_F of the construction
  double overlap_bound = 0.0;  // max_{k != l} sqrt(max(0, p_k + p_l - n_h)), a lower bound for any construction
};

/// Builds bases for the requested dimensions and reports retention and overlap. When the
/// dimensions fit, the bases are orthogonal and W_hh is block diagonal. Otherwise each U_k
/// takes p_k consecutive axes of a random orthogonal frame, wrapping around, which spreads
/// the unavoidable overlap evenly.
inline InterferenceReport interference_experiment(const std::vector<int>& dims, int n_h, Rng& rng) {
  SEQCL_CHECK(!dims.empty() && n_h >= 1, "interference_experiment: invalid arguments");
  InterferenceReport r;
  r.capacity = n_h;
  for (int p : dims) {
    SEQCL_CHECK(p >= 1 && p <= n_h, "interference_experiment: each p_k must lie in [1, n_h]");
    r.total_dim += p;
  }
  r.feasible = r.total_dim <= n_h;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd(randn(n_h, n_h, rng)));
  const Mat frame = Eigen::MatrixXd(qr.householderQ());
  std::vector<Mat> bases;
  int off = 0;
  for (int p : dims) {
    Mat u(n_h, p);
    for (int j = 0; j < p; ++j) u.col(j) = frame.col((off + j) % n_h);
    off = (off + p) % n_h;
    bases.push_back(std::move(u));
  }
  Mat w = Mat::Zero(n_h, n_h);
  for (const auto& u : bases) {
    const auto p = static_cast<int>(u.cols());
    Eigen::HouseholderQR<Eigen::MatrixXd> qk(Eigen::MatrixXd(randn(p, p, rng)));
    w += u * Mat(Eigen::MatrixXd(qk.householderQ())) * u.transpose();
  }
  for (const auto& u : bases) r.retention_errors.push_back(subspace_retention_error(w, u));
  for (std::size_t k = 0; k < bases.size(); ++k)
    for (std::size_t l = k + 1; l < bases.size(); ++l) {
      r.max_overlap = std::max(r.max_overlap, (bases[k].transpose() * bases[l]).norm());
      const int excess = dims[k] + dims[l] - n_h;
      r.overlap_bound = std::max(r.overlap_bound, std::sqrt(static_cast<double>(std::max(0, excess))));
    }
  return r;
}

}  // namespace seqcl::analysis
