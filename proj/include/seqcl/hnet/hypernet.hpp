// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "seqcl/core/param_vector.hpp"
#include "seqcl/core/rng.hpp"
#include "seqcl/core/tape.hpp"

namespace seqcl::hnet {

enum class Activation { sigmoid, relu, tanh };

inline Activation parse_activation(const std::string& s) {
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw ConfigError("unknown hypernetwork activation '" + s + "'");
}

inline ad::Var activate(ad::Var x, Activation a) {
  switch (a) {
    case Activation::sigmoid: return ad::sigmoid(x);
    case Activation::relu: return ad::relu(x);
    case Activation::tanh: return ad::tanh(x);
  }
  return x;
}

struct HnetArch {
  std::vector<int> hidden{25, 25};
  int chunk_out = 1000;
  int task_emb_dim = 16;
  int chunk_emb_dim = 16;
  Activation activation = Activation::sigmoid;
  double task_emb_init_sd = 1.0;
  double chunk_emb_init_sd = 1.0;
  double out_init_scale = 0.25;  // multiplies the usual 1/sqrt(fan_in) bound of the output layer

  void validate() const {
    if (chunk_out < 1) throw ConfigError("hypernetwork: chunk output size must be >= 1");
    if (task_emb_dim < 1 || chunk_emb_dim < 1) throw ConfigError("hypernetwork: embedding dims must be >= 1");
    for (int h : hidden)
      if (h < 1) throw ConfigError("hypernetwork: hidden layer sizes must be >= 1");
  }

  [[nodiscard]] Eigen::Index num_chunks(Eigen::Index target_size) const {
    return (target_size + chunk_out - 1) / chunk_out;
  }

  /// theta = chunk embeddings + MLP weights.
  [[nodiscard]] ParamLayout theta_layout(Eigen::Index target_size) const {
    ParamLayout l;
    l.add("chunk_emb", num_chunks(target_size), chunk_emb_dim);
    Eigen::Index fan_in = task_emb_dim + chunk_emb_dim;
    for (std::size_t k = 0; k < hidden.size(); ++k) {
      const std::string n = "l" + std::to_string(k);
      l.add(n + "/W", hidden[k], fan_in).add(n + "/b", hidden[k], 1);
      fan_in = hidden[k];
    }
    l.add("out/W", chunk_out, fan_in).add("out/b", chunk_out, 1);
    return l;
  }
};

inline ParamLayout embedding_layout(int num_tasks, int dim) {
  ParamLayout l;
  for (int k = 0; k < num_tasks; ++k) l.add("e" + std::to_string(k), dim, 1);
  return l;
}

/// h(e, theta): the MLP applied to concat(e, c_i) for every chunk i, outputs concatenated
/// row by row and truncated to target_size. Returns a target_size x 1 column.
inline ad::Var generate(const HnetArch& arch, Eigen::Index target_size, const ParamViews& theta, ad::Var emb) {
  SEQCL_CHECK(emb.rows() == arch.task_emb_dim && emb.cols() == 1, "hypernetwork: task embedding shape mismatch");
  const ad::Var chunks = theta["chunk_emb"];
  ad::Var x = ad::concat_cols(ad::broadcast_rows(ad::transpose(emb), chunks.rows()), chunks);
  for (std::size_t k = 0; k < arch.hidden.size(); ++k) {
    const std::string n = "l" + std::to_string(k);
    x = activate(ad::affine(x, theta[n + "/W"], theta[n + "/b"]), arch.activation);
  }
  const ad::Var out = ad::affine(x, theta["out/W"], theta["out/b"]);
  return ad::flatten_truncate(out, target_size);
}

/// Frozen copies taken at a task boundary, plus the outputs they produce.
struct HnetCheckpoint {
  Vec theta;
  Vec embeddings;
  std::vector<Vec> targets;  // h(e~_k, theta~) for every task k learned so far
};

/// Hypernetwork state: theta, one embedding per task and the latest checkpoint.
class Hypernet {
 public:
  Hypernet(HnetArch arch, Eigen::Index target_size, int num_tasks, Rng& rng)
      : arch_(std::move(arch)),
        target_size_(target_size),
        num_tasks_(num_tasks),
        theta_((arch_.validate(), arch_.theta_layout(target_size))),
        emb_(embedding_layout(num_tasks, arch_.task_emb_dim)) {
    SEQCL_CHECK(target_size >= 1 && num_tasks >= 1, "hypernetwork: invalid target size or task count");
    const double ratio = compression_ratio();
    if (ratio > 1.0)
      throw ConfigError("hypernetwork: compression ratio " + std::to_string(ratio) +
                        " > 1; shrink the hypernetwork or its chunk size");
    init(rng);
  }

  [[nodiscard]] const HnetArch& arch() const { return arch_; }
  [[nodiscard]] Eigen::Index target_size() const { return target_size_; }
  [[nodiscard]] int num_tasks() const { return num_tasks_; }
  [[nodiscard]] Eigen::Index num_chunks() const { return arch_.num_chunks(target_size_); }
  [[nodiscard]] ParamVector& theta() { return theta_; }
  [[nodiscard]] const ParamVector& theta() const { return theta_; }
  [[nodiscard]] ParamVector& embeddings() { return emb_; }
  [[nodiscard]] const ParamVector& embeddings() const { return emb_; }
  [[nodiscard]] const std::optional<HnetCheckpoint>& checkpoint_state() const { return ckpt_; }

  /// (|theta| + one task embedding) / |psi|.
  [[nodiscard]] double compression_ratio() const {
    return static_cast<double>(theta_.size() + arch_.task_emb_dim) / static_cast<double>(target_size_);
  }

  /// Non-differentiable weight generation for task k.
  [[nodiscard]] Vec generate_weights(int task) const {
    check_task(task);
    ad::Tape tape;
    const ad::Var th = tape.leaf("theta", as_column(theta_.entries()), false);
    const ad::Var e = tape.leaf("emb", Mat(emb_.view(emb_name(task))), false);
    return as_vec(generate(arch_, target_size_, ParamViews(theta_.layout(), th), e).value());
  }

  /// Freezes theta and the embeddings and caches the outputs for every task < num_learned.
  void checkpoint(int num_learned) {
    SEQCL_CHECK(num_learned >= 0 && num_learned <= num_tasks_, "hypernetwork: checkpoint task count out of range");
    HnetCheckpoint c;
    c.theta = theta_.entries();
    c.embeddings = emb_.entries();
    for (int k = 0; k < num_learned; ++k) c.targets.push_back(generate_weights(k));
    ckpt_ = std::move(c);
  }

  [[nodiscard]] static std::string emb_name(int k) { return "e" + std::to_string(k); }

  void check_task(int task) const {
    SEQCL_CHECK(task >= 0 && task < num_tasks_, "hypernetwork: unknown task id " + std::to_string(task));
  }

 private:
  void init(Rng& rng) {
    for (const auto& v : theta_.layout().views()) {
      auto w = theta_.view(v.name);
      if (v.name == "chunk_emb") {
        w = randn(v.rows, v.cols, rng, arch_.chunk_emb_init_sd);
      } else if (v.cols == 1) {
        w.setZero();
      } else {
        double bound = 1.0 / std::sqrt(static_cast<double>(v.cols));
        if (v.name == "out/W") bound *= arch_.out_init_scale;
        w = rand_uniform(v.rows, v.cols, rng, -bound, bound);
      }
    }
    emb_.entries() = as_vec(randn(emb_.size(), 1, rng, arch_.task_emb_init_sd));
  }

  HnetArch arch_;
  Eigen::Index target_size_;
  int num_tasks_;
  ParamVector theta_;
  ParamVector emb_;
  std::optional<HnetCheckpoint> ckpt_;
};

/// (beta / |S|) * sum_k ||outputs[k] - targets[k]||^2 over paired generated outputs and
/// frozen targets.
inline ad::Var hnet_output_penalty(const std::vector<ad::Var>& outputs, const std::vector<Vec>& targets, double beta) {
  SEQCL_CHECK(!outputs.empty() && outputs.size() == targets.size(), "hnet_regularizer: outputs and targets differ in count");
  ad::Var total;
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    SEQCL_CHECK(outputs[k].rows() == targets[k].size() && outputs[k].cols() == 1, "hnet_regularizer: output length mismatch");
    const ad::Var d = ad::weighted_sq_dist(outputs[k], as_column(targets[k]), Mat::Ones(targets[k].size(), 1));
    total = total.valid() ? ad::add(total, d) : d;
  }
  return ad::scale(total, beta / static_cast<double>(outputs.size()));
}

/// (beta / |S|) * sum_{k in S} ||h(e_k, theta) - h(e~_k, theta~)||^2 for S a subset of the
/// tasks before `current`; S is all of them when `subset` is empty. Zero for current == 0.
inline ad::Var hnet_regularizer(const Hypernet& net, const ParamViews& theta, const ParamViews& emb, int current,
                                double beta, const std::vector<int>& subset = {}) {
  ad::Tape& tape = theta.flat().tape();
  if (current == 0 || beta == 0.0) return tape.constant(Mat::Zero(1, 1));
  const auto& ck = net.checkpoint_state();
  SEQCL_CHECK(ck.has_value() && static_cast<int>(ck->targets.size()) >= current,
              "hnet_regularizer: no checkpoint covering the previous tasks");
  std::vector<int> tasks = subset;
  if (tasks.empty())
    for (int k = 0; k < current; ++k) tasks.push_back(k);
  std::vector<ad::Var> outputs;
  std::vector<Vec> targets;
  for (int k : tasks) {
    SEQCL_CHECK(k >= 0 && k < current, "hnet_regularizer: subset contains a non-previous task");
    outputs.push_back(generate(net.arch(), net.target_size(), theta, emb[Hypernet::emb_name(k)]));
    targets.push_back(ck->targets[static_cast<std::size_t>(k)]);
  }
  return hnet_output_penalty(outputs, targets, beta);
}

/// C distinct previous tasks drawn uniformly without replacement.
inline std::vector<int> sample_task_subset(int current, int c, Rng& rng) {
  SEQCL_CHECK(c >= 1 && c <= current, "hnet_regularizer: subset size must satisfy 1 <= C <= K-1");
  std::vector<int> all(static_cast<std::size_t>(current));
  for (int k = 0; k < current; ++k) all[static_cast<std::size_t>(k)] = k;
  for (int k = 0; k < c; ++k) {
    const auto j = k + static_cast<int>(rng() % static_cast<std::uint64_t>(current - k));
    std::swap(all[static_cast<std::size_t>(k)], all[static_cast<std::size_t>(j)]);
  }
  all.resize(static_cast<std::size_t>(c));
  return all;
}

}  // namespace seqcl::hnet
