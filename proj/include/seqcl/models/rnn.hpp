// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "seqcl/core/orthogonal.hpp"
#include "seqcl/core/param_vector.hpp"
#include "seqcl/core/rng.hpp"
#include "seqcl/core/tape.hpp"

namespace seqcl::models {

enum class CellKind { vanilla, lstm };

inline CellKind parse_cell(const std::string& s) {
  if (s == "vanilla" || s == "rnn") return CellKind::vanilla;
  if (s == "lstm") return CellKind::lstm;
  throw ConfigError("unknown model kind '" + s + "'");
}

inline std::string to_string(CellKind k) { return k == CellKind::vanilla ? "vanilla" : "lstm"; }

inline const char* const kLstmGates[4] = {"i", "f", "g", "o"};

/// Single recurrent layer with one linear output head per task.
///
/// Vanilla (Elman) layer:  h_t = tanh(W_xh x_t + W_hh h_{t-1} + b_h),
///                         o_t = W_ro h_t + b_ro   (shared linear readout)
/// LSTM layer:             standard gates; the layer output is h_t.
/// Head k:                 z_t = W_k o_t + b_k
///
/// Shared views come first in the layout, heads last, so the shared parameters are a
/// prefix of the flat vector.
struct RnnArch {
  CellKind kind = CellKind::vanilla;
  int n_in = 8;
  int n_hidden = 32;
  int n_out = 7;
  int num_heads = 1;
  int task_id_dims = 0;  // > 0 appends a one-hot task id of this width to every input
  int vae_latent = 0;    // > 0 adds an encoder head emitting (mu, logvar) of this width

  [[nodiscard]] int input_width() const { return n_in + task_id_dims; }

  [[nodiscard]] static std::string head_w(int k) { return "head" + std::to_string(k) + "/W"; }
  [[nodiscard]] static std::string head_b(int k) { return "head" + std::to_string(k) + "/b"; }

  [[nodiscard]] ParamLayout layout() const {
    SEQCL_CHECK(n_in >= 1 && n_hidden >= 1 && n_out >= 1 && num_heads >= 1, "RnnArch: invalid sizes");
    ParamLayout l;
    const int nx = input_width(), nh = n_hidden;
    if (kind == CellKind::vanilla) {
      l.add("W_xh", nh, nx).add("W_hh", nh, nh).add("b_h", nh, 1);
      l.add("W_ro", nh, nh).add("b_ro", nh, 1);
    } else {
      for (const char* g : kLstmGates) {
        const std::string s(g);
        l.add("W_x" + s, nh, nx).add("W_h" + s, nh, nh).add("b_" + s, nh, 1);
      }
    }
    if (vae_latent > 0) l.add("W_enc", 2 * vae_latent, nh).add("b_enc", 2 * vae_latent, 1);
    for (int k = 0; k < num_heads; ++k) l.add(head_w(k), n_out, nh).add(head_b(k), n_out, 1);
    return l;
  }

  /// Length of the task-shared prefix (everything except the heads).
  [[nodiscard]] Eigen::Index shared_size() const {
    const ParamLayout l = layout();
    return l.find(head_w(0)).offset;
  }

  [[nodiscard]] std::vector<std::string> recurrent_views() const {
    if (kind == CellKind::vanilla) return {"W_hh"};
    return {"W_hi", "W_hf", "W_hg", "W_ho"};
  }

  /// Same network with a single head; used as the target of weight generators.
  [[nodiscard]] RnnArch single_head() const {
    RnnArch a = *this;
    a.num_heads = 1;
    return a;
  }
};

/// PyTorch-style uniform(+-1/sqrt(fan_in)) weights, zero biases, and optionally orthogonal
/// hidden-to-hidden matrices.
inline ParamVector init_params(const RnnArch& arch, Rng& rng, bool orthogonal_hh = true) {
  ParamVector pv(arch.layout());
  for (const auto& v : pv.layout().views()) {
    auto w = pv.view(v.name);
    if (v.cols == 1 && v.name.rfind("b", 0) == 0) {
      w.setZero();
      continue;
    }
    if (v.name.rfind("head", 0) == 0 && v.name.back() == 'b') {
      w.setZero();
      continue;
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(v.cols));
    w = rand_uniform(v.rows, v.cols, rng, -bound, bound);
  }
  if (orthogonal_hh)
    for (const auto& name : arch.recurrent_views()) {
      const auto& v = pv.layout().find(name);
      pv.view(name) = orthogonal_init(v.rows, v.cols, rng);
    }
  if (arch.kind == CellKind::lstm) pv.view("b_f").setOnes();
  return pv;
}

/// Activations of one unrolled sequence. Index 0 of hidden/cell is the zero initial state.
struct SeqOutput {
  std::vector<ad::Var> logits;     // per step; invalid where outputs were not requested
  std::vector<ad::Var> layer_out;  // per step; invalid where outputs were not requested
  std::vector<ad::Var> enc;        // per step (mu | logvar) when the arch has a VAE encoder head
  std::vector<ad::Var> hidden;     // T + 1 entries
  std::vector<ad::Var> cell;       // T + 1 entries (LSTM only)
};

/// Which steps need readout and head outputs; empty means all.
using OutputSteps = std::vector<char>;

struct ForwardOptions {
  const Mat* mask = nullptr;  // 1 x n_h binary gate, or null
  OutputSteps output_steps;
  int task_id = -1;           // one-hot input position when task ids are fed in; -1 means the head index
};

namespace detail {

inline ad::Var masked(ad::Var v, const Mat* batch_mask) {
  return batch_mask ? ad::mul_const(v, *batch_mask) : v;
}

}  // namespace detail

/// One vanilla step; returns (h_t, pre-head layer output or invalid if skipped).
inline std::pair<ad::Var, ad::Var> rnn_step(ad::Var x, ad::Var h_prev, ad::Var w_xh, ad::Var w_hh, ad::Var b_h,
                                            ad::Var w_ro, ad::Var b_ro, const Mat* batch_mask,
                                            bool want_output = true) {
  ad::Var pre = ad::add(ad::affine(x, w_xh, b_h), ad::linear(h_prev, w_hh));
  ad::Var h = detail::masked(ad::tanh(pre), batch_mask);
  if (!want_output) return {h, ad::Var{}};
  ad::Var o = detail::masked(ad::affine(h, w_ro, b_ro), batch_mask);
  return {h, o};
}

struct LstmWeights {
  ad::Var wx[4], wh[4], b[4];
};

inline std::pair<ad::Var, ad::Var> lstm_step(ad::Var x, ad::Var h_prev, ad::Var c_prev, const LstmWeights& w,
                                             const Mat* batch_mask) {
  auto gate = [&](int k) { return ad::add(ad::affine(x, w.wx[k], w.b[k]), ad::linear(h_prev, w.wh[k])); };
  const ad::Var i = ad::sigmoid(gate(0));
  const ad::Var f = ad::sigmoid(gate(1));
  const ad::Var g = ad::tanh(gate(2));
  const ad::Var o = ad::sigmoid(gate(3));
  const ad::Var c = ad::add(ad::mul(f, c_prev), ad::mul(i, g));
  const ad::Var h = detail::masked(ad::mul(o, ad::tanh(c)), batch_mask);
  return {h, c};
}

namespace detail {

// Core unroll over full-width input nodes (task id columns already appended).
inline SeqOutput unroll(const RnnArch& arch, const ParamViews& psi, const std::vector<ad::Var>& xs, Eigen::Index B,
                        int head, const ForwardOptions& opt) {
  SEQCL_CHECK(head >= 0 && head < arch.num_heads,
              "forward_sequence: unknown task/head id " + std::to_string(head));
  ad::Tape& tape = psi.flat().tape();
  const auto T = static_cast<int>(xs.size());
  const int nh = arch.n_hidden;
  SEQCL_CHECK(opt.output_steps.empty() || static_cast<int>(opt.output_steps.size()) == T,
              "forward_sequence: output_steps length mismatch");
  std::optional<Mat> batch_mask;
  if (opt.mask) {
    SEQCL_CHECK(opt.mask->rows() == 1 && opt.mask->cols() == nh, "forward_sequence: mask must be 1 x n_h");
    batch_mask = opt.mask->replicate(B, 1);
  }
  const Mat* bm = batch_mask ? &*batch_mask : nullptr;

  SeqOutput out;
  out.hidden.push_back(tape.constant(Mat::Zero(B, nh)));
  if (arch.kind == CellKind::lstm) out.cell.push_back(tape.constant(Mat::Zero(B, nh)));
  if (T == 0) return out;

  const ad::Var hw = psi[RnnArch::head_w(head)], hb = psi[RnnArch::head_b(head)];
  ad::Var w_enc, b_enc;
  if (arch.vae_latent > 0) {
    w_enc = psi["W_enc"];
    b_enc = psi["b_enc"];
  }
  ad::Var w_xh, w_hh, b_h, w_ro, b_ro;
  LstmWeights lw;
  if (arch.kind == CellKind::vanilla) {
    w_xh = psi["W_xh"];
    w_hh = psi["W_hh"];
    b_h = psi["b_h"];
    w_ro = psi["W_ro"];
    b_ro = psi["b_ro"];
  } else {
    for (int k = 0; k < 4; ++k) {
      const std::string g(kLstmGates[k]);
      lw.wx[k] = psi["W_x" + g];
      lw.wh[k] = psi["W_h" + g];
      lw.b[k] = psi["b_" + g];
    }
  }

  out.logits.resize(static_cast<std::size_t>(T));
  out.layer_out.resize(static_cast<std::size_t>(T));
  if (arch.vae_latent > 0) out.enc.resize(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    const ad::Var& xt = xs[static_cast<std::size_t>(t)];
    const bool want = opt.output_steps.empty() || opt.output_steps[static_cast<std::size_t>(t)] ||
                      arch.vae_latent > 0;
    ad::Var o;
    if (arch.kind == CellKind::vanilla) {
      auto [h, lo] = rnn_step(xt, out.hidden.back(), w_xh, w_hh, b_h, w_ro, b_ro, bm, want);
      out.hidden.push_back(h);
      o = lo;
    } else {
      auto [h, c] = lstm_step(xt, out.hidden.back(), out.cell.back(), lw, bm);
      out.hidden.push_back(h);
      out.cell.push_back(c);
      o = h;
    }
    if (!want) continue;
    out.layer_out[static_cast<std::size_t>(t)] = o;
    if (opt.output_steps.empty() || opt.output_steps[static_cast<std::size_t>(t)])
      out.logits[static_cast<std::size_t>(t)] = ad::affine(o, hw, hb);
    if (arch.vae_latent > 0) out.enc[static_cast<std::size_t>(t)] = ad::affine(o, w_enc, b_enc);
  }
  return out;
}

inline Mat task_onehot(const RnnArch& arch, Eigen::Index B, int head, const ForwardOptions& opt) {
  const int id = opt.task_id >= 0 ? opt.task_id : head;
  SEQCL_CHECK(id < arch.task_id_dims, "forward_sequence: task id exceeds one-hot width");
  Mat onehot = Mat::Zero(B, arch.task_id_dims);
  onehot.col(id).setOnes();
  return onehot;
}

}  // namespace detail

/// Unrolls the network over time-major inputs (x[t] is B x F_in) from h_0 = 0 and applies
/// head `head` at every requested step.
inline SeqOutput forward_sequence(const RnnArch& arch, const ParamViews& psi, const std::vector<Mat>& x, int head,
                                  const ForwardOptions& opt = {}) {
  ad::Tape& tape = psi.flat().tape();
  const Eigen::Index B = x.empty() ? 1 : x.front().rows();
  Mat onehot;
  if (arch.task_id_dims > 0) onehot = detail::task_onehot(arch, B, head, opt);
  std::vector<ad::Var> xs;
  xs.reserve(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    const Mat& xt = x[t];
    SEQCL_CHECK(xt.rows() == B && xt.cols() == arch.n_in, "forward_sequence: input shape mismatch at t=" + std::to_string(t));
    if (arch.task_id_dims > 0) {
      Mat xc(B, arch.input_width());
      xc << xt, onehot;
      xs.push_back(tape.constant(std::move(xc)));
    } else {
      xs.push_back(tape.constant(xt));
    }
  }
  return detail::unroll(arch, psi, xs, B, head, opt);
}

/// Same as forward_sequence with differentiable inputs (x[t] is a B x F_in node).
inline SeqOutput forward_sequence(const RnnArch& arch, const ParamViews& psi, const std::vector<ad::Var>& x,
                                  int head, const ForwardOptions& opt = {}) {
  ad::Tape& tape = psi.flat().tape();
  const Eigen::Index B = x.empty() ? 1 : x.front().rows();
  Mat onehot;
  if (arch.task_id_dims > 0) onehot = detail::task_onehot(arch, B, head, opt);
  std::vector<ad::Var> xs;
  xs.reserve(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    SEQCL_CHECK(x[t].rows() == B && x[t].cols() == arch.n_in, "forward_sequence: input shape mismatch at t=" + std::to_string(t));
    xs.push_back(arch.task_id_dims > 0 ? ad::concat_cols(x[t], tape.constant(onehot)) : x[t]);
  }
  return detail::unroll(arch, psi, xs, B, head, opt);
}

/// Steps where any loss weight is nonzero.
inline OutputSteps weighted_steps(const std::vector<Mat>& w) {
  OutputSteps s(w.size(), 0);
  for (std::size_t t = 0; t < w.size(); ++t) s[t] = (w[t].array() != 0.0).any() ? 1 : 0;
  return s;
}

/// Sum of strength * ||W^T W - I||^2 over every hidden-to-hidden matrix.
inline ad::Var orthogonal_penalty(const RnnArch& arch, const ParamViews& psi, double strength) {
  ad::Var total;
  for (const auto& name : arch.recurrent_views()) {
    const ad::Var term = orthogonal_reg(psi[name], strength);
    total = total.valid() ? ad::add(total, term) : term;
  }
  return total;
}

/// Forward pass without gradients, for evaluation: per-step logits (B x F_out).
inline std::vector<Mat> predict(const RnnArch& arch, const ParamLayout& layout, const Vec& psi,
                                const std::vector<Mat>& x, int head, const ForwardOptions& opt = {}) {
  ad::Tape tape;
  const ad::Var flat = tape.leaf("psi", as_column(psi), false);
  const SeqOutput out = forward_sequence(arch, ParamViews(layout, flat), x, head, opt);
  std::vector<Mat> logits;
  logits.reserve(out.logits.size());
  for (const auto& z : out.logits) logits.push_back(z.valid() ? z.value() : Mat());
  return logits;
}

inline std::vector<Mat> predict(const RnnArch& arch, const ParamVector& psi, const std::vector<Mat>& x, int head,
                                const ForwardOptions& opt = {}) {
  return predict(arch, psi.layout(), psi.entries(), x, head, opt);
}

}  // namespace seqcl::models
