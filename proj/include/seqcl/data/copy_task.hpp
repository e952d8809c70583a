// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Copy Task family: basic, padded, permuted and pattern-manipulation variants.
//
// Time layout for pattern length p and input length i (0-based rows, T = i + 1 + p):
//   rows [0, p)          random pattern in input columns [0, F_in - 1)
//   rows [p, i)          zero padding (padded variant only)
//   row  i               stop flag in input column F_in - 1
//   rows [i + 1, i + 1 + p)  recall window; targets live here and nowhere else

#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "seqcl/core/rng.hpp"
#include "seqcl/core/types.hpp"

namespace seqcl::data {

enum class Variant { basic, padded, permuted, patman };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::basic: return "basic";
    case Variant::padded: return "padded";
    case Variant::permuted: return "permuted";
    case Variant::patman: return "patman";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "basic") return Variant::basic;
  if (s == "padded") return Variant::padded;
  if (s == "permuted") return Variant::permuted;
  if (s == "patman") return Variant::patman;
  throw ConfigError("unknown copy-task variant '" + s + "'");
}

struct CopyConfig {
  int p = 5;     // pattern length
  int i = 5;     // input length (pattern + padding)
  int f_in = 8;  // pattern bits + stop bit

  [[nodiscard]] int f_out() const { return f_in - 1; }
  [[nodiscard]] int seq_len() const { return i + 1 + p; }
  [[nodiscard]] int stop_step() const { return i; }
  [[nodiscard]] int recall_start() const { return i + 1; }

  void validate() const {
    if (p < 1) throw ConfigError("copy task: p must be >= 1");
    if (i < p) throw ConfigError("copy task: i must be >= p");
    if (f_in < 2) throw ConfigError("copy task: F_in must be >= 2");
  }
};

/// A permutation of {0..p-1}; pattern step t is recalled at recall offset perm[t].
using Permutation = std::vector<int>;

struct TaskSpec {
  Variant variant = Variant::basic;
  std::vector<Permutation> permutations;
  int r = 0;
  int task_id = 0;
};

struct Sample {
  Mat x;            // T x F_in
  Mat y;            // T x F_out
  Mat loss_weight;  // T x F_out
};

inline bool is_permutation_of_range(const Permutation& perm, int p) {
  if (static_cast<int>(perm.size()) != p) return false;
  std::vector<char> seen(static_cast<std::size_t>(p), 0);
  for (int v : perm) {
    if (v < 0 || v >= p || seen[static_cast<std::size_t>(v)]) return false;
    seen[static_cast<std::size_t>(v)] = 1;
  }
  return true;
}

inline Permutation random_permutation(int p, Rng& rng) {
  Permutation perm(static_cast<std::size_t>(p));
  std::iota(perm.begin(), perm.end(), 0);
  // Fisher-Yates with explicit modulo draws, so suites are identical across standard libraries.
  for (int k = p - 1; k > 0; --k) {
    const auto j = static_cast<int>(rng() % static_cast<std::uint64_t>(k + 1));
    std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(j)]);
  }
  return perm;
}

inline void validate_spec(const CopyConfig& cfg, const TaskSpec& spec) {
  cfg.validate();
  for (const auto& perm : spec.permutations)
    SEQCL_CHECK(is_permutation_of_range(perm, cfg.p), "task spec: permutation is not a bijection on the pattern steps");
  switch (spec.variant) {
    case Variant::basic:
    case Variant::padded:
      SEQCL_CHECK(spec.r == 0 && spec.permutations.empty(), "task spec: basic/padded tasks carry no permutations");
      break;
    case Variant::permuted:
      SEQCL_CHECK(spec.permutations.size() == 1, "task spec: permuted task needs exactly one permutation");
      break;
    case Variant::patman:
      SEQCL_CHECK(static_cast<int>(spec.permutations.size()) == spec.r,
                  "task spec: pattern manipulation needs r permutations");
      break;
  }
}

/// Recall-window target for a p x F_out pattern.
inline Mat make_target_pattern(const Mat& pattern, const TaskSpec& spec) {
  const Eigen::Index p = pattern.rows();
  auto permute = [&](const Permutation& perm) {
    Mat out(p, pattern.cols());
    for (Eigen::Index t = 0; t < p; ++t) out.row(perm[static_cast<std::size_t>(t)]) = pattern.row(t);
    return out;
  };
  switch (spec.variant) {
    case Variant::basic:
    case Variant::padded: return pattern;
    case Variant::permuted: return permute(spec.permutations.front());
    case Variant::patman: {
      Mat y = pattern;
      for (const auto& perm : spec.permutations) {
        const Mat xp = permute(perm);
        y = (y.array() != xp.array()).cast<double>().matrix();  // XOR on {0,1}
      }
      return y;
    }
  }
  return pattern;
}

/// Builds a sample from an explicit p x F_out binary pattern.
inline Sample sample_from_pattern(const CopyConfig& cfg, const TaskSpec& spec, const Mat& pattern) {
  const int T = cfg.seq_len(), fo = cfg.f_out();
  SEQCL_CHECK(pattern.rows() == cfg.p && pattern.cols() == fo, "sample_from_pattern: pattern shape mismatch");
  Sample s;
  s.x = Mat::Zero(T, cfg.f_in);
  s.y = Mat::Zero(T, fo);
  s.loss_weight = Mat::Zero(T, fo);
  s.x.topLeftCorner(cfg.p, fo) = pattern;
  s.x(cfg.stop_step(), cfg.f_in - 1) = 1.0;
  s.y.middleRows(cfg.recall_start(), cfg.p) = make_target_pattern(pattern, spec);
  s.loss_weight.middleRows(cfg.recall_start(), cfg.p).setOnes();
  return s;
}

inline Mat random_pattern(int p, int f_out, Rng& rng) {
  Mat m(p, f_out);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = static_cast<double>(rng() >> 63);
  return m;
}

/// Draws one sample; pattern bits are i.i.d. Bernoulli(0.5).
inline Sample gen_sample(const CopyConfig& cfg, const TaskSpec& spec, Rng& rng) {
  validate_spec(cfg, spec);
  return sample_from_pattern(cfg, spec, random_pattern(cfg.p, cfg.f_out(), rng));
}

/// K task specifications. Permuted tasks get one random permutation each, pattern
/// manipulation tasks get r. Pure function of the arguments.
inline std::vector<TaskSpec> make_task_suite(Variant variant, int num_tasks, const CopyConfig& cfg, int r,
                                             std::uint64_t master_seed) {
  SEQCL_CHECK(num_tasks >= 1, "make_task_suite: need at least one task");
  cfg.validate();
  Rng rng = make_rng(master_seed, "task-suite");
  std::vector<TaskSpec> suite;
  for (int k = 0; k < num_tasks; ++k) {
    TaskSpec spec;
    spec.variant = variant;
    spec.task_id = k;
    if (variant == Variant::permuted) {
      spec.permutations.push_back(random_permutation(cfg.p, rng));
    } else if (variant == Variant::patman) {
      SEQCL_CHECK(r >= 1, "make_task_suite: pattern manipulation needs r >= 1");
      spec.r = r;
      for (int j = 0; j < r; ++j) spec.permutations.push_back(random_permutation(cfg.p, rng));
    }
    suite.push_back(std::move(spec));
  }
  return suite;
}

/// Time-major minibatch: x[t] is B x F_in, y[t] and w[t] are B x F_out.
struct Batch {
  std::vector<Mat> x;
  std::vector<Mat> y;
  std::vector<Mat> w;
  int task_id = 0;

  [[nodiscard]] int seq_len() const { return static_cast<int>(x.size()); }
  [[nodiscard]] Eigen::Index size() const { return x.empty() ? 0 : x.front().rows(); }
};

inline Batch stack(const std::vector<Sample>& samples, int task_id) {
  SEQCL_CHECK(!samples.empty(), "stack: empty sample list");
  const Eigen::Index T = samples.front().x.rows(), B = static_cast<Eigen::Index>(samples.size());
  Batch b;
  b.task_id = task_id;
  b.x.assign(static_cast<std::size_t>(T), Mat(B, samples.front().x.cols()));
  b.y.assign(static_cast<std::size_t>(T), Mat(B, samples.front().y.cols()));
  b.w.assign(static_cast<std::size_t>(T), Mat(B, samples.front().y.cols()));
  for (Eigen::Index n = 0; n < B; ++n) {
    const Sample& s = samples[static_cast<std::size_t>(n)];
    SEQCL_CHECK(s.x.rows() == T, "stack: samples differ in length");
    for (Eigen::Index t = 0; t < T; ++t) {
      b.x[static_cast<std::size_t>(t)].row(n) = s.x.row(t);
      b.y[static_cast<std::size_t>(t)].row(n) = s.y.row(t);
      b.w[static_cast<std::size_t>(t)].row(n) = s.loss_weight.row(t);
    }
  }
  return b;
}

inline std::vector<Sample> gen_samples(const CopyConfig& cfg, const TaskSpec& spec, int n, Rng& rng) {
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) out.push_back(gen_sample(cfg, spec, rng));
  return out;
}

inline Batch gen_batch(const CopyConfig& cfg, const TaskSpec& spec, int n, Rng& rng) {
  return stack(gen_samples(cfg, spec, n, rng), spec.task_id);
}

/// Fixed held-out test set of task k; the seed depends only on (master_seed, k).
inline std::vector<Sample> test_set(const CopyConfig& cfg, const TaskSpec& spec, int n, std::uint64_t master_seed) {
  Rng rng = make_rng(master_seed, "test/" + std::to_string(spec.task_id));
  return gen_samples(cfg, spec, n, rng);
}

struct BitCount {
  long correct = 0;
  long total = 0;
};

/// Counts thresholded recall-window bits; logits >= 0 <=> sigmoid >= 0.5.
inline BitCount count_bits(const Mat& logits, const Mat& target, const Mat& weight, double threshold = 0.5) {
  SEQCL_CHECK(logits.rows() == target.rows() && logits.cols() == target.cols() &&
                  weight.rows() == target.rows() && weight.cols() == target.cols(),
              "bit_accuracy: shape mismatch");
  const double logit_threshold = std::log(threshold / (1.0 - threshold));
  BitCount c;
  for (Eigen::Index k = 0; k < logits.size(); ++k) {
    if (weight.data()[k] <= 0.0) continue;
    const bool pred = logits.data()[k] >= logit_threshold;
    const bool bit = target.data()[k] >= 0.5;
    c.total += 1;
    c.correct += pred == bit ? 1 : 0;
  }
  return c;
}

/// Fraction of recall-window bits predicted correctly for one sample.
inline double bit_accuracy(const Mat& logits, const Sample& sample, double threshold = 0.5) {
  const BitCount c = count_bits(logits, sample.y, sample.loss_weight, threshold);
  SEQCL_CHECK(c.total > 0, "bit_accuracy: empty recall window");
  return static_cast<double>(c.correct) / static_cast<double>(c.total);
}

}  // namespace seqcl::data
