// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "seqcl/core/rng.hpp"

namespace seqcl::cl {

/// Number of gated-off units for a mask over n units.
inline int masked_count(int n, double fraction) {
  return static_cast<int>(std::lround(fraction * static_cast<double>(n)));
}

/// 1 x n_h binary gate with exactly round(fraction * n_h) zeros at random positions.
/// Deterministic in (master_seed, task_id).
inline Mat mask_generate(int n_h, double fraction, int task_id, std::uint64_t master_seed) {
  SEQCL_CHECK(n_h >= 1, "mask_generate: n_h must be >= 1");
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("mask_generate: fraction must lie in [0, 1]");
  Rng rng = make_rng(master_seed, "masks/" + std::to_string(task_id));
  std::vector<int> idx(static_cast<std::size_t>(n_h));
  std::iota(idx.begin(), idx.end(), 0);
  const int zeros = masked_count(n_h, fraction);
  for (int k = 0; k < zeros; ++k) {
    const auto j = k + static_cast<int>(rng() % static_cast<std::uint64_t>(n_h - k));
    std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(j)]);
  }
  Mat m = Mat::Ones(1, n_h);
  for (int k = 0; k < zeros; ++k) m(0, idx[static_cast<std::size_t>(k)]) = 0.0;
  return m;
}

/// Mask that keeps exactly the units in [begin, end).
inline Mat block_mask(int n_h, int begin, int end) {
  SEQCL_CHECK(0 <= begin && begin <= end && end <= n_h, "block_mask: range out of bounds");
  Mat m = Mat::Zero(1, n_h);
  m.middleCols(begin, end - begin).setOnes();
  return m;
}

struct MaskSet {
  std::vector<Mat> masks;
  double masked_fraction = 0.8;

  [[nodiscard]] const Mat& at(int task) const {
    SEQCL_CHECK(task >= 0 && task < static_cast<int>(masks.size()), "MaskSet: unknown task id");
    return masks[static_cast<std::size_t>(task)];
  }
};

inline MaskSet make_mask_set(int num_tasks, int n_h, double fraction, std::uint64_t master_seed) {
  MaskSet s;
  s.masked_fraction = fraction;
  for (int k = 0; k < num_tasks; ++k) s.masks.push_back(mask_generate(n_h, fraction, k, master_seed));
  return s;
}

}  // namespace seqcl::cl
