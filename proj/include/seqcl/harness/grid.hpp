// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "seqcl/harness/experiment.hpp"

namespace seqcl::harness {

/// Runs job(0..n-1) on up to `workers` threads. Results must be written by index.
inline void parallel_for(int n, int workers, const std::function<void(int)>& job) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int k = 0; k < n; ++k) job(k);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int k = next++; k < n; k = next++) {
        try {
          job(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

/// `cap` distinct indices out of n, chosen with the seeded "grid" stream and returned sorted.
/// cap <= 0 or cap >= n keeps everything.
inline std::vector<int> subsample_indices(int n, int cap, std::uint64_t seed) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) idx[static_cast<std::size_t>(k)] = k;
  if (cap <= 0 || cap >= n) return idx;
  Rng rng = make_rng(seed, "grid");
  for (int k = 0; k < cap; ++k) {
    const auto j = k + static_cast<int>(rng() % static_cast<std::uint64_t>(n - k));
    std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(cap));
  std::sort(idx.begin(), idx.end());
  return idx;
}

struct GridEntry {
  RawConfig config;
  RunRecord record;  // search run, first seed
  double final = std::nan("");
};

struct GridResult {
  std::vector<GridEntry> entries;   // in grid order
  std::vector<int> ranking;         // indices into entries, best final first; failed runs last
  std::vector<RunRecord> best_runs; // best configuration on every seed
  double best_mean_final = std::nan("");
  double best_std_final = std::nan("");
};

inline RawConfig with_seed(RawConfig raw, std::uint64_t seed) {
  raw.values["experiment.seed"] = std::to_string(seed);
  return raw;
}

/// Cartesian grid (optionally capped) searched on seeds[0], ranked by final accuracy; the
/// best configuration is then re-run on every seed.
inline GridResult grid_search(const RawConfig& base, int cap, const std::vector<std::uint64_t>& seeds,
                              int workers = 1) {
  SEQCL_CHECK(!seeds.empty(), "grid_search: need at least one seed");
  const std::vector<RawConfig> all = expand_grid(base);
  const std::vector<int> keep = subsample_indices(static_cast<int>(all.size()), cap, seeds.front());
  GridResult res;
  for (int k : keep) res.entries.push_back({all[static_cast<std::size_t>(k)], {}, std::nan("")});
  // Validate everything before spending compute.
  for (const auto& e : res.entries) (void)materialize(with_seed(e.config, seeds.front()));

  parallel_for(static_cast<int>(res.entries.size()), workers, [&](int k) {
    GridEntry& e = res.entries[static_cast<std::size_t>(k)];
    e.record = run_experiment(materialize(with_seed(e.config, seeds.front())));
    if (e.record.ok()) e.final = during_final_metrics(e.record).final;
  });

  res.ranking.resize(res.entries.size());
  for (std::size_t k = 0; k < res.ranking.size(); ++k) res.ranking[k] = static_cast<int>(k);
  std::stable_sort(res.ranking.begin(), res.ranking.end(), [&](int a, int b) {
    const double fa = res.entries[static_cast<std::size_t>(a)].final;
    const double fb = res.entries[static_cast<std::size_t>(b)].final;
    if (std::isnan(fa) != std::isnan(fb)) return std::isnan(fb);
    return !std::isnan(fa) && fa > fb;
  });
  if (res.ranking.empty() || std::isnan(res.entries[static_cast<std::size_t>(res.ranking.front())].final)) return res;

  const RawConfig& best = res.entries[static_cast<std::size_t>(res.ranking.front())].config;
  res.best_runs.resize(seeds.size());
  parallel_for(static_cast<int>(seeds.size()), workers, [&](int s) {
    res.best_runs[static_cast<std::size_t>(s)] = run_experiment(materialize(with_seed(best, seeds[static_cast<std::size_t>(s)])));
  });
  std::vector<double> finals;
  for (const auto& r : res.best_runs)
    if (r.ok()) finals.push_back(during_final_metrics(r).final);
  if (!finals.empty()) {
    double mean = 0.0, var = 0.0;
    for (double f : finals) mean += f;
    mean /= static_cast<double>(finals.size());
    for (double f : finals) var += (f - mean) * (f - mean);
    res.best_mean_final = mean;
    res.best_std_final = finals.size() > 1 ? std::sqrt(var / static_cast<double>(finals.size() - 1)) : 0.0;
  }
  return res;
}

}  // namespace seqcl::harness
