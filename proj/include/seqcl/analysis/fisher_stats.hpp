// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "seqcl/core/param_vector.hpp"

namespace seqcl::analysis {

struct FisherStats {
  double mean = 0.0;
  double max = 0.0;
  double min = 0.0;
  std::vector<double> edges;  // bins + 1 entries
  std::vector<long> counts;   // bins entries, summing to the view size
};

inline FisherStats fisher_stats(const Vec& values, int bins = 20) {
  SEQCL_CHECK(values.size() > 0, "fisher_stats: empty view");
  SEQCL_CHECK(bins >= 1, "fisher_stats: need at least one bin");
  FisherStats s;
  s.mean = values.mean();
  s.max = values.maxCoeff();
  s.min = values.minCoeff();
  const double lo = s.min;
  const double hi = s.max > s.min ? s.max : s.min + 1.0;
  const double w = (hi - lo) / bins;
  for (int b = 0; b <= bins; ++b) s.edges.push_back(lo + w * b);
  s.counts.assign(static_cast<std::size_t>(bins), 0);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    auto b = static_cast<int>((values[i] - lo) / w);
    b = std::clamp(b, 0, bins - 1);
    s.counts[static_cast<std::size_t>(b)] += 1;
  }
  return s;
}

/// Statistics of a diagonal Fisher restricted to one named view of `layout`.
/// The Fisher may cover only a prefix of the layout (shared parameters).
inline FisherStats fisher_stats(const Vec& fisher, const ParamLayout& layout, const std::string& view, int bins = 20) {
  const auto& v = layout.find(view);
  SEQCL_CHECK(v.end() <= fisher.size(), "fisher_stats: view '" + view + "' lies outside the Fisher vector");
  return fisher_stats(Vec(fisher.segment(v.offset, v.size())), bins);
}

}  // namespace seqcl::analysis
