// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "seqcl/analysis/fisher_stats.hpp"
#include "seqcl/analysis/pca.hpp"
#include "seqcl/analysis/queue_rnn.hpp"
#include "seqcl/analysis/subspace.hpp"
#include "seqcl/data/copy_task.hpp"

using namespace seqcl;
using namespace seqcl::analysis;
using Catch::Matchers::WithinAbs;

namespace {

Mat random_orthogonal(int n, Rng& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd(randn(n, n, rng)));
  return Eigen::MatrixXd(qr.householderQ());
}

}  // namespace

TEST_CASE("PCA intrinsic dimension examples", "[analysis][pca]") {
  Rng rng = make_rng(1, "pca");
  const Mat rank1 = randn(50, 1, rng) * randn(1, 6, rng);
  REQUIRE(pca_intrinsic_dim(rank1) == 1);

  Mat whitened = Mat::Zero(6, 5);
  for (int k = 0; k < 3; ++k) {
    whitened(2 * k, k) = 1.0;
    whitened(2 * k + 1, k) = -1.0;
  }
  REQUIRE(pca_intrinsic_dim(whitened) == 3);

  const Mat full = randn(20, 5, rng);
  REQUIRE(pca_intrinsic_dim(full, 1.0) == 5);
  REQUIRE(pca_intrinsic_dim(Mat::Constant(10, 4, 3.0)) == 0);
  REQUIRE_THROWS(pca_intrinsic_dim(full, 0.0));
  REQUIRE_THROWS(pca_intrinsic_dim(Mat::Zero(1, 3)));

  // Fewer samples than units goes through the SVD path.
  const Mat wide = randn(4, 30, rng) * 0.1 + randn(4, 1, rng) * randn(1, 30, rng) * 5.0;
  REQUIRE(pca_intrinsic_dim(wide) == 1);
  const std::vector<int> per_step = intrinsic_dim_per_step({rank1, whitened});
  REQUIRE(per_step == std::vector<int>{1, 3});
}

TEST_CASE("PCA dimension ignores rotations and offsets", "[analysis][pca][property]") {
  Rng rng = make_rng(2, "pca");
  for (int k = 0; k < 20; ++k) {
    Mat h = randn(40, 8, rng);
    h.col(0) *= 6.0;
    h.col(1) *= 3.0;
    const Mat moved = (h * random_orthogonal(8, rng)).rowwise() + randn(1, 8, rng, 10.0).row(0);
    for (double th : {0.5, 0.75, 0.9})
      REQUIRE(pca_intrinsic_dim(moved, th) == pca_intrinsic_dim(h, th));
  }
}

TEST_CASE("Fisher statistics", "[analysis][fisher]") {
  const FisherStats zero = fisher_stats(Vec::Zero(10));
  REQUIRE(zero.mean == 0.0);
  REQUIRE(zero.max == 0.0);
  const FisherStats two = fisher_stats(Vec::Constant(7, 2.0), 4);
  REQUIRE(two.mean == 2.0);
  REQUIRE(two.edges.size() == 5);
  REQUIRE(std::accumulate(two.counts.begin(), two.counts.end(), 0L) == 7);

  Rng rng = make_rng(3, "fisher");
  const Vec f = as_vec(randn(333, 1, rng)).cwiseAbs2();
  const FisherStats s = fisher_stats(f, 13);
  REQUIRE(std::accumulate(s.counts.begin(), s.counts.end(), 0L) == 333);
  REQUIRE(s.counts.size() == 13);
  REQUIRE_THAT(s.mean, WithinAbs(f.mean(), 1e-15));
  REQUIRE(s.edges.front() == f.minCoeff());
  REQUIRE_THAT(s.edges.back(), WithinAbs(f.maxCoeff(), 1e-12));

  ParamLayout l;
  l.add("a", 2, 2).add("b", 3, 1);
  Vec full(7);
  full << 1, 1, 1, 1, 5, 6, 7;
  REQUIRE(fisher_stats(full, l, "b").mean == 6.0);
  REQUIRE_THROWS(fisher_stats(Vec(full.head(5)), l, "b"));
  REQUIRE_THROWS(fisher_stats(Vec()));
}

TEST_CASE("head subspace similarity", "[analysis][subspace]") {
  Rng rng = make_rng(4, "heads");
  const Mat basis = random_orthogonal(10, rng);
  const Mat h1 = randn(7, 3, rng) * basis.leftCols(3).transpose();
  const Mat h2 = randn(7, 3, rng) * basis.leftCols(3).transpose();
  REQUIRE_THAT(head_subspace_similarity(h1, h2), WithinAbs(std::sqrt(3.0), 1e-9));
  const Mat h3 = randn(7, 4, rng) * basis.middleCols(3, 4).transpose();
  REQUIRE_THAT(head_subspace_similarity(h1, h3), WithinAbs(0.0, 1e-9));
  REQUIRE(head_subspace_similarity(Mat::Zero(7, 10), h1) == 0.0);
  REQUIRE_THROWS(head_subspace_similarity(h1, Mat::Ones(7, 9)));

  for (int k = 0; k < 10; ++k) {
    const Mat a = randn(7, 10, rng), b = randn(7, 10, rng);
    REQUIRE_THAT(head_subspace_similarity(a, b), WithinAbs(head_subspace_similarity(b, a), 1e-9));
  }
}

TEST_CASE("block-structured recurrence keeps subspaces", "[analysis][subspace]") {
  Rng rng = make_rng(5, "sub");
  const auto bases = random_orthogonal_bases(8, {3, 3}, rng);
  const Mat w = build_subspace_rnn(bases, {Mat::Identity(3, 3), Mat::Identity(3, 3)});
  for (const auto& u : bases) {
    REQUIRE((w * u - u).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE(subspace_retention_error(w, u) < 1e-12);
  }

  const double delta = 0.2;
  OffBlocks off;
  off[{1, 0}] = delta * Mat::Identity(3, 3);
  const Mat leaky = build_subspace_rnn(bases, {random_orthogonal(3, rng), random_orthogonal(3, rng)}, off);
  REQUIRE_THAT(subspace_retention_error(leaky, bases[0]), WithinAbs(delta * std::sqrt(3.0), 1e-12));
  REQUIRE_THAT(interference_measure(leaky, bases[0], bases[1]), WithinAbs(delta * std::sqrt(3.0), 1e-12));
  REQUIRE(subspace_retention_error(leaky, bases[1]) < 1e-12);

  const Mat eye = Mat::Identity(4, 4);
  REQUIRE_THROWS_AS(build_subspace_rnn({eye.leftCols(3), eye.rightCols(3)}, {Mat::Identity(3, 3), Mat::Identity(3, 3)}),
                    Error);
  REQUIRE_THROWS(random_orthogonal_bases(4, {3, 2}, rng));
}

TEST_CASE("retention error of generic recurrences", "[analysis][subspace][property]") {
  Rng rng = make_rng(6, "sub");
  for (int k = 0; k < 10; ++k) {
    const Mat w = randn(8, 8, rng);
    const Mat q = random_orthogonal(8, rng);
    REQUIRE(subspace_retention_error(w, q.leftCols(3)) > 0.0);
    REQUIRE(subspace_retention_error(w, q) < 1e-10);
  }
}

TEST_CASE("interference experiment", "[analysis][subspace]") {
  Rng rng = make_rng(7, "sub");
  const auto fit = interference_experiment({8, 8, 8, 8}, 32, rng);
  REQUIRE(fit.feasible);
  REQUIRE(fit.total_dim == 32);
  REQUIRE(fit.retention_errors.size() == 4);
  for (double e : fit.retention_errors) REQUIRE(e < 1e-10);
  REQUIRE(fit.max_overlap < 1e-10);
  REQUIRE(fit.overlap_bound == 0.0);

  const auto crowded = interference_experiment({12, 12}, 16, rng);
  REQUIRE_FALSE(crowded.feasible);
  REQUIRE_THAT(crowded.overlap_bound, WithinAbs(std::sqrt(8.0), 1e-12));
  REQUIRE(crowded.max_overlap >= crowded.overlap_bound - 1e-9);
  REQUIRE(*std::max_element(crowded.retention_errors.begin(), crowded.retention_errors.end()) > 1e-3);
  REQUIRE_THROWS(interference_experiment({17}, 16, rng));
}

TEST_CASE("queue RNN solves the copy task", "[analysis][queue]") {
  for (int p = 1; p <= 10; ++p) {
    const data::CopyConfig cfg{p, p, 8};
    const LinearRnn net = build_queue_copy_rnn(p, cfg.f_out());
    REQUIRE(net.n_hidden() == (p + 1) * cfg.f_out() + 1);
    Rng rng = make_rng(static_cast<std::uint64_t>(p), "queue");
    for (int n = 0; n < 10; ++n) {
      const data::Sample s = data::gen_sample(cfg, {}, rng);
      const Mat y = simulate_linear_rnn(net, s.x);
      REQUIRE(data::bit_accuracy(y, s) == 1.0);
    }
    const Mat slots = slot_block(net);
    REQUIRE((slots.transpose() * slots - Mat::Identity(slots.rows(), slots.cols())).cwiseAbs().maxCoeff() == 0.0);
  }
  REQUIRE_THROWS(build_queue_copy_rnn(0, 7));
  Mat hidden;
  const LinearRnn net = build_queue_copy_rnn(2, 3);
  simulate_linear_rnn(net, Mat::Zero(5, 4), &hidden);
  REQUIRE(hidden.rows() == 5);
  REQUIRE(hidden.isZero(0.0));
}
