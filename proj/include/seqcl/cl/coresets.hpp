// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "seqcl/core/rng.hpp"
#include "seqcl/data/copy_task.hpp"
#include "seqcl/models/losses.hpp"
#include "seqcl/models/rnn.hpp"

namespace seqcl::cl {

/// N samples drawn without replacement from `dataset`.
inline std::vector<data::Sample> coreset_build(const std::vector<data::Sample>& dataset, int n, Rng& rng) {
  SEQCL_CHECK(n >= 0 && n <= static_cast<int>(dataset.size()), "coreset_build: N exceeds the dataset size");
  std::vector<std::size_t> idx(dataset.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) {
    const std::size_t j = k + static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(idx.size() - k));
    std::swap(idx[k], idx[j]);
  }
  std::vector<data::Sample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) out.push_back(dataset[idx[k]]);
  return out;
}

/// sigma(logits) of a frozen parameter vector on stored inputs; one T x F_out matrix per sample.
inline std::vector<Mat> distill_targets(const models::RnnArch& arch, const ParamLayout& layout, const Vec& frozen,
                                        const std::vector<data::Sample>& inputs, int head,
                                        const models::ForwardOptions& opt = {}) {
  std::vector<Mat> out;
  if (inputs.empty()) return out;
  const data::Batch b = data::stack(inputs, head);
  const std::vector<Mat> logits = models::predict(arch, layout, frozen, b.x, head, opt);
  const auto T = static_cast<Eigen::Index>(logits.size());
  const Eigen::Index fo = logits.front().cols();
  for (Eigen::Index n = 0; n < b.size(); ++n) {
    Mat y(T, fo);
    for (Eigen::Index t = 0; t < T; ++t) y.row(t) = ad::sigmoid_mat(logits[static_cast<std::size_t>(t)].row(n));
    out.push_back(std::move(y));
  }
  return out;
}

/// Stored inputs of one past task with their soft targets.
struct CoresetEntry {
  int task_id = 0;
  std::vector<data::Sample> samples;  // inputs and loss weights; hard labels unused
  std::vector<Mat> soft_targets;      // refreshed from the pre-task checkpoint
};

struct Coreset {
  std::vector<CoresetEntry> tasks;
  int size = 100;
  double lambda_distill = 1.0;

  [[nodiscard]] std::size_t total() const {
    std::size_t n = 0;
    for (const auto& t : tasks) n += t.samples.size();
    return n;
  }
};

/// Replay minibatch of `n` stored samples spread at random over all coresets, grouped by
/// task so each group can use its own head. Soft targets replace the hard labels.
inline std::vector<data::Batch> replay_batches(const Coreset& cs, int n, Rng& rng) {
  const std::size_t total = cs.total();
  SEQCL_CHECK(total > 0, "replay_batches: coreset is empty");
  std::vector<std::vector<data::Sample>> groups(cs.tasks.size());
  for (int k = 0; k < n; ++k) {
    std::size_t j = static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(total));
    std::size_t t = 0;
    while (j >= cs.tasks[t].samples.size()) j -= cs.tasks[t++].samples.size();
    data::Sample s = cs.tasks[t].samples[j];
    s.y = cs.tasks[t].soft_targets[j];
    groups[t].push_back(std::move(s));
  }
  std::vector<data::Batch> out;
  for (std::size_t t = 0; t < groups.size(); ++t)
    if (!groups[t].empty()) out.push_back(data::stack(groups[t], cs.tasks[t].task_id));
  return out;
}

/// lambda * sum over groups of the soft-target BCE of the current prediction.
inline ad::Var distill_loss(ad::Tape& tape, const std::vector<std::vector<ad::Var>>& logits_per_group,
                            const std::vector<data::Batch>& groups, double lambda) {
  SEQCL_CHECK(logits_per_group.size() == groups.size(), "distill_loss: group count mismatch");
  ad::Var total = tape.constant(Mat::Zero(1, 1));
  if (lambda == 0.0) return total;
  for (std::size_t g = 0; g < groups.size(); ++g)
    total = ad::add(total, models::batch_bce_loss(tape, logits_per_group[g], groups[g]));
  return ad::scale(total, lambda);
}

}  // namespace seqcl::cl
