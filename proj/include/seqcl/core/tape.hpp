// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "seqcl/core/types.hpp"

namespace seqcl::ad {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; only valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  [[nodiscard]] Tape& tape() const { return *tape_; }
  [[nodiscard]] std::size_t id() const { return id_; }
  [[nodiscard]] bool valid() const { return tape_ != nullptr; }

  [[nodiscard]] const Mat& value() const;
  /// Gradient after backward(); an all-zero matrix if nothing flowed into this node.
  [[nodiscard]] Mat grad() const;
  [[nodiscard]] Eigen::Index rows() const { return value().rows(); }
  [[nodiscard]] Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  [[nodiscard]] double scalar() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

struct Node {
  Mat value;
  Mat grad;  // empty until the first accumulation
  std::vector<std::size_t> parents;
  std::function<void(Tape&, std::size_t)> backward;
  std::string name;
  bool requires_grad = false;
};

using GradientMap = std::map<std::string, Mat>;

/// Append-only computation graph. Nodes are created in evaluation order, so node ids
/// are already a topological order and a reverse sweep is a valid backward pass.
class Tape {
 public:
  Tape() { nodes_.reserve(1024); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(std::string name, Mat value, bool requires_grad = true) {
    Node n;
    n.value = std::move(value);
    n.name = std::move(name);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    const std::size_t id = nodes_.size() - 1;
    if (requires_grad && !nodes_[id].name.empty()) named_.push_back(id);
    return {this, id};
  }

  Var constant(Mat value) { return leaf({}, std::move(value), false); }

  /// Records an op result. The backward rule is dropped when no parent needs a gradient.
  Var push(Mat value, std::vector<std::size_t> parents,
           std::function<void(Tape&, std::size_t)> backward) {
    Node n;
    n.value = std::move(value);
    for (std::size_t p : parents) n.requires_grad = n.requires_grad || nodes_.at(p).requires_grad;
    n.parents = std::move(parents);
    if (n.requires_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  [[nodiscard]] const Node& node(std::size_t id) const { return nodes_.at(id); }
  [[nodiscard]] Node& node(std::size_t id) { return nodes_.at(id); }
  [[nodiscard]] const Mat& value(std::size_t id) const { return nodes_[id].value; }
  [[nodiscard]] bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }

  /// Adds `g` into the gradient slot of node `id` (no-op for constants).
  template <typename Derived>
  void accumulate(std::size_t id, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  /// Grad slot of node `id`, allocated to zeros on demand.
  Mat& grad_slot(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  void zero_grad() {
    for (auto& n : nodes_) n.grad.resize(0, 0);
  }

  /// Reverse sweep from a scalar loss. Clears all previous gradients first, so several
  /// losses sharing one forward graph can be differentiated one after another.
  GradientMap backward(Var loss) {
    SEQCL_CHECK(loss.valid() && &loss.tape() == this, "backward: loss belongs to another tape");
    const std::size_t root = loss.id();
    SEQCL_CHECK(nodes_[root].value.rows() == 1 && nodes_[root].value.cols() == 1,
                "backward: loss must be scalar, got " + shape_str(nodes_[root].value));
    zero_grad();
    std::vector<char> reachable(root + 1, 0);
    reachable[root] = 1;
    for (std::size_t i = root + 1; i-- > 0;) {
      if (!reachable[i]) continue;
      for (std::size_t p : nodes_[i].parents) {
        if (p >= i) throw Error("seqcl: backward: graph cycle detected at node " + std::to_string(i));
        reachable[p] = 1;
      }
    }
    nodes_[root].grad = Mat::Ones(1, 1);
    for (std::size_t i = root + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!reachable[i] || !n.requires_grad || !n.backward || n.grad.size() == 0) continue;
      n.backward(*this, i);
    }
    GradientMap out;
    for (std::size_t id : named_) {
      const Node& n = nodes_[id];
      out[n.name] = n.grad.size() ? n.grad : Mat::Zero(n.value.rows(), n.value.cols());
    }
    return out;
  }

 private:
  std::vector<Node> nodes_;
  std::vector<std::size_t> named_;
};

inline const Mat& Var::value() const { return tape_->value(id_); }

inline Mat Var::grad() const {
  const Node& n = tape_->node(id_);
  return n.grad.size() ? n.grad : Mat::Zero(n.value.rows(), n.value.cols());
}

inline double Var::scalar() const {
  const Mat& v = value();
  SEQCL_CHECK(v.size() == 1, "scalar(): node is " + shape_str(v));
  return v(0, 0);
}

// ---------------------------------------------------------------------------
// Elementwise arithmetic
// ---------------------------------------------------------------------------

namespace detail {
inline void same_shape(const Var& a, const Var& b, const char* op) {
  SEQCL_CHECK(&a.tape() == &b.tape(), std::string(op) + ": operands on different tapes");
  SEQCL_CHECK(a.rows() == b.rows() && a.cols() == b.cols(),
              std::string(op) + ": shape mismatch " + shape_str(a.value()) + " vs " +
                  shape_str(b.value()));
}
}  // namespace detail

inline Var add(Var a, Var b) {
  detail::same_shape(a, b, "add");
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().push(a.value() + b.value(), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Mat& g = t.node(self).grad;
    t.accumulate(ia, g);
    t.accumulate(ib, g);
  });
}

inline Var sub(Var a, Var b) {
  detail::same_shape(a, b, "sub");
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().push(a.value() - b.value(), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Mat& g = t.node(self).grad;
    t.accumulate(ia, g);
    t.accumulate(ib, -g);
  });
}

/// Hadamard product.
inline Var mul(Var a, Var b) {
  detail::same_shape(a, b, "mul");
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().push(a.value().cwiseProduct(b.value()), {ia, ib},
                       [ia, ib](Tape& t, std::size_t self) {
                         const Mat& g = t.node(self).grad;
                         if (t.requires_grad(ia)) t.accumulate(ia, g.cwiseProduct(t.value(ib)));
                         if (t.requires_grad(ib)) t.accumulate(ib, g.cwiseProduct(t.value(ia)));
                       });
}

/// Hadamard product with a constant matrix (masks, per-position weights).
inline Var mul_const(Var a, Mat c) {
  SEQCL_CHECK(a.rows() == c.rows() && a.cols() == c.cols(), "mul_const: shape mismatch");
  const std::size_t ia = a.id();
  Mat out = a.value().cwiseProduct(c);
  return a.tape().push(std::move(out), {ia}, [ia, c = std::move(c)](Tape& t, std::size_t self) {
    t.accumulate(ia, t.node(self).grad.cwiseProduct(c));
  });
}

inline Var scale(Var a, double s) {
  const std::size_t ia = a.id();
  return a.tape().push(a.value() * s, {ia}, [ia, s](Tape& t, std::size_t self) {
    t.accumulate(ia, t.node(self).grad * s);
  });
}

inline Var add_scalar(Var a, double s) {
  const std::size_t ia = a.id();
  return a.tape().push((a.value().array() + s).matrix(), {ia}, [ia](Tape& t, std::size_t self) {
    t.accumulate(ia, t.node(self).grad);
  });
}

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }
inline Var operator*(Var a, double s) { return scale(a, s); }

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

inline Var matmul(Var a, Var b) {
  SEQCL_CHECK(a.cols() == b.rows(), "matmul: inner dimensions differ " + shape_str(a.value()) +
                                        " * " + shape_str(b.value()));
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().push(a.value() * b.value(), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Mat& g = t.node(self).grad;
    if (t.requires_grad(ia)) t.accumulate(ia, g * t.value(ib).transpose());
    if (t.requires_grad(ib)) t.accumulate(ib, t.value(ia).transpose() * g);
  });
}

inline Var transpose(Var a) {
  const std::size_t ia = a.id();
  return a.tape().push(a.value().transpose(), {ia}, [ia](Tape& t, std::size_t self) {
    t.accumulate(ia, t.node(self).grad.transpose());
  });
}

/// x * W^T + 1 b^T for x (batch x in), W (out x in), b (out x 1).
inline Var affine(Var x, Var w, Var b) {
  SEQCL_CHECK(x.cols() == w.cols(), "affine: x is " + shape_str(x.value()) + ", W is " +
                                        shape_str(w.value()));
  SEQCL_CHECK(b.rows() == w.rows() && b.cols() == 1, "affine: bias must be out x 1");
  const std::size_t ix = x.id(), iw = w.id(), ib = b.id();
  Mat out = x.value() * w.value().transpose();
  out.rowwise() += b.value().col(0).transpose();
  return x.tape().push(std::move(out), {ix, iw, ib}, [ix, iw, ib](Tape& t, std::size_t self) {
    const Mat& g = t.node(self).grad;
    if (t.requires_grad(ix)) t.accumulate(ix, g * t.value(iw));
    if (t.requires_grad(iw)) t.accumulate(iw, g.transpose() * t.value(ix));
    if (t.requires_grad(ib)) t.accumulate(ib, g.colwise().sum().transpose());
  });
}

/// x * W^T without bias.
inline Var linear(Var x, Var w) {
  SEQCL_CHECK(x.cols() == w.cols(), "linear: x is " + shape_str(x.value()) + ", W is " +
                                        shape_str(w.value()));
  const std::size_t ix = x.id(), iw = w.id();
  return x.tape().push(x.value() * w.value().transpose(), {ix, iw},
                       [ix, iw](Tape& t, std::size_t self) {
                         const Mat& g = t.node(self).grad;
                         if (t.requires_grad(ix)) t.accumulate(ix, g * t.value(iw));
                         if (t.requires_grad(iw)) t.accumulate(iw, g.transpose() * t.value(ix));
                       });
}

// ---------------------------------------------------------------------------
// Nonlinearities
// ---------------------------------------------------------------------------

inline Var tanh(Var a) {
  const std::size_t ia = a.id();
  return a.tape().push(a.value().array().tanh().matrix(), {ia}, [ia](Tape& t, std::size_t self) {
    const Node& n = t.node(self);
    t.accumulate(ia, (n.grad.array() * (1.0 - n.value.array().square())).matrix());
  });
}

inline double sigmoid_scalar(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline Mat sigmoid_mat(const Mat& z) { return z.unaryExpr([](double v) { return sigmoid_scalar(v); }); }

inline Var sigmoid(Var a) {
  const std::size_t ia = a.id();
  return a.tape().push(sigmoid_mat(a.value()), {ia}, [ia](Tape& t, std::size_t self) {
    const Node& n = t.node(self);
    t.accumulate(ia, (n.grad.array() * n.value.array() * (1.0 - n.value.array())).matrix());
  });
}

inline Var relu(Var a) {
  const std::size_t ia = a.id();
  return a.tape().push(a.value().cwiseMax(0.0), {ia}, [ia](Tape& t, std::size_t self) {
    const Node& n = t.node(self);
    t.accumulate(ia, (n.grad.array() * (t.value(ia).array() > 0.0).cast<double>()).matrix());
  });
}

inline Var exp(Var a) {
  const std::size_t ia = a.id();
  return a.tape().push(a.value().array().exp().matrix(), {ia}, [ia](Tape& t, std::size_t self) {
    const Node& n = t.node(self);
    t.accumulate(ia, n.grad.cwiseProduct(n.value));
  });
}

inline Var log(Var a) {
  const std::size_t ia = a.id();
  return a.tape().push(a.value().array().log().matrix(), {ia}, [ia](Tape& t, std::size_t self) {
    t.accumulate(ia, (t.node(self).grad.array() / t.value(ia).array()).matrix());
  });
}

inline Var square(Var a) {
  const std::size_t ia = a.id();
  return a.tape().push(a.value().array().square().matrix(), {ia}, [ia](Tape& t, std::size_t self) {
    t.accumulate(ia, 2.0 * t.node(self).grad.cwiseProduct(t.value(ia)));
  });
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

inline Var sum(Var a) {
  const std::size_t ia = a.id();
  Mat out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape().push(std::move(out), {ia}, [ia](Tape& t, std::size_t self) {
    const double g = t.node(self).grad(0, 0);
    const Mat& v = t.value(ia);
    t.accumulate(ia, Mat::Constant(v.rows(), v.cols(), g));
  });
}

inline Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

/// sum(a^2)
inline Var sq_norm(Var a) {
  const std::size_t ia = a.id();
  Mat out(1, 1);
  out(0, 0) = a.value().squaredNorm();
  return a.tape().push(std::move(out), {ia}, [ia](Tape& t, std::size_t self) {
    t.accumulate(ia, 2.0 * t.node(self).grad(0, 0) * t.value(ia));
  });
}

/// sum_i w_i (a_i - ref_i)^2 with constant ref and w.
inline Var weighted_sq_dist(Var a, Mat ref, Mat w) {
  SEQCL_CHECK(ref.rows() == a.rows() && ref.cols() == a.cols() && w.rows() == a.rows() &&
                  w.cols() == a.cols(),
              "weighted_sq_dist: shape mismatch");
  const std::size_t ia = a.id();
  Mat out(1, 1);
  out(0, 0) = (w.array() * (a.value() - ref).array().square()).sum();
  return a.tape().push(std::move(out), {ia},
                       [ia, ref = std::move(ref), w = std::move(w)](Tape& t, std::size_t self) {
                         const double g = t.node(self).grad(0, 0);
                         t.accumulate(ia, (2.0 * g * w.array() * (t.value(ia) - ref).array()).matrix());
                       });
}

// ---------------------------------------------------------------------------
// Shape manipulation
// ---------------------------------------------------------------------------

/// rows x cols row-major window into a column vector starting at `offset`.
inline Var view(Var vec, Eigen::Index offset, Eigen::Index rows, Eigen::Index cols) {
  SEQCL_CHECK(vec.cols() == 1, "view: source must be a column vector");
  SEQCL_CHECK(offset >= 0 && offset + rows * cols <= vec.rows(), "view: window out of range");
  const std::size_t iv = vec.id();
  Mat out = Eigen::Map<const Mat>(vec.value().data() + offset, rows, cols);
  return vec.tape().push(std::move(out), {iv}, [iv, offset, rows, cols](Tape& t, std::size_t self) {
    Mat& g = t.grad_slot(iv);
    Eigen::Map<Mat>(g.data() + offset, rows, cols) += t.node(self).grad;
  });
}

inline Var slice_cols(Var a, Eigen::Index start, Eigen::Index n) {
  SEQCL_CHECK(start >= 0 && start + n <= a.cols(), "slice_cols: out of range");
  const std::size_t ia = a.id();
  return a.tape().push(a.value().middleCols(start, n), {ia}, [ia, start, n](Tape& t, std::size_t self) {
    t.grad_slot(ia).middleCols(start, n) += t.node(self).grad;
  });
}

inline Var concat_cols(Var a, Var b) {
  SEQCL_CHECK(a.rows() == b.rows(), "concat_cols: row mismatch");
  const std::size_t ia = a.id(), ib = b.id();
  const Eigen::Index ca = a.cols(), cb = b.cols();
  Mat out(a.rows(), ca + cb);
  out << a.value(), b.value();
  return a.tape().push(std::move(out), {ia, ib}, [ia, ib, ca, cb](Tape& t, std::size_t self) {
    const Mat& g = t.node(self).grad;
    if (t.requires_grad(ia)) t.accumulate(ia, g.leftCols(ca));
    if (t.requires_grad(ib)) t.accumulate(ib, g.rightCols(cb));
  });
}

inline Var concat_rows(const std::vector<Var>& parts) {
  SEQCL_CHECK(!parts.empty(), "concat_rows: nothing to concatenate");
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts.front().cols();
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    SEQCL_CHECK(p.cols() == cols, "concat_rows: column mismatch");
    rows += p.rows();
    ids.push_back(p.id());
  }
  Mat out(rows, cols);
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return parts.front().tape().push(std::move(out), ids, [ids](Tape& t, std::size_t self) {
    const Mat& g = t.node(self).grad;
    Eigen::Index r0 = 0;
    for (std::size_t id : ids) {
      const Eigen::Index n = t.value(id).rows();
      if (t.requires_grad(id)) t.accumulate(id, g.middleRows(r0, n));
      r0 += n;
    }
  });
}

/// Repeats a 1 x d row n times.
inline Var broadcast_rows(Var row, Eigen::Index n) {
  SEQCL_CHECK(row.rows() == 1, "broadcast_rows: expects a single row");
  const std::size_t ir = row.id();
  Mat out = row.value().replicate(n, 1);
  return row.tape().push(std::move(out), {ir}, [ir](Tape& t, std::size_t self) {
    t.accumulate(ir, t.node(self).grad.colwise().sum());
  });
}

/// Row-major flatten of `a`, keeping the first n entries, as an n x 1 column.
inline Var flatten_truncate(Var a, Eigen::Index n) {
  SEQCL_CHECK(n >= 0 && n <= a.value().size(), "flatten_truncate: n exceeds element count");
  const std::size_t ia = a.id();
  Mat out = Eigen::Map<const Mat>(a.value().data(), n, 1);
  return a.tape().push(std::move(out), {ia}, [ia, n](Tape& t, std::size_t self) {
    Mat& g = t.grad_slot(ia);
    Eigen::Map<Mat>(g.data(), n, 1) += t.node(self).grad;
  });
}

// ---------------------------------------------------------------------------
// Fused likelihood terms
// ---------------------------------------------------------------------------

/// sum w * [softplus(z) - y z], i.e. weighted binary cross-entropy of sigmoid(z) against
/// (possibly soft) targets y, in log-sigmoid form.
inline Var bce_with_logits(Var z, const Mat& y, const Mat& w) {
  SEQCL_CHECK(y.rows() == z.rows() && y.cols() == z.cols() && w.rows() == z.rows() &&
                  w.cols() == z.cols(),
              "bce_with_logits: shape mismatch (logits " + shape_str(z.value()) + ", targets " +
                  shape_str(y) + ")");
  const std::size_t iz = z.id();
  const auto& zv = z.value().array();
  const Mat per = (zv.max(0.0) - zv * y.array() + (-zv.abs()).exp().log1p()).matrix();
  Mat out(1, 1);
  out(0, 0) = (w.array() * per.array()).sum();
  return z.tape().push(std::move(out), {iz}, [iz, y, w](Tape& t, std::size_t self) {
    const double g = t.node(self).grad(0, 0);
    const Mat s = sigmoid_mat(t.value(iz));
    t.accumulate(iz, (g * w.array() * (s - y).array()).matrix());
  });
}

/// sum_r w_r * -log softmax(z_r)[label_r] over the rows of z.
inline Var softmax_xent(Var z, const std::vector<int>& labels, const std::vector<double>& w) {
  const Eigen::Index rows = z.rows(), classes = z.cols();
  SEQCL_CHECK(static_cast<Eigen::Index>(labels.size()) == rows &&
                  static_cast<Eigen::Index>(w.size()) == rows,
              "softmax_xent: one label and weight per row required");
  Mat prob(rows, classes);
  double total = 0.0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const int lab = labels[static_cast<std::size_t>(r)];
    SEQCL_CHECK(lab >= 0 && lab < classes, "softmax_xent: label " + std::to_string(lab) +
                                               " out of range [0," + std::to_string(classes) + ")");
    const double mx = z.value().row(r).maxCoeff();
    const auto e = (z.value().row(r).array() - mx).exp();
    const double denom = e.sum();
    prob.row(r) = e / denom;
    total += w[static_cast<std::size_t>(r)] * (std::log(denom) + mx - z.value()(r, lab));
  }
  Mat out(1, 1);
  out(0, 0) = total;
  const std::size_t iz = z.id();
  return z.tape().push(std::move(out), {iz},
                       [iz, labels, w, prob = std::move(prob)](Tape& t, std::size_t self) {
                         const double g = t.node(self).grad(0, 0);
                         Mat d = prob;
                         for (Eigen::Index r = 0; r < d.rows(); ++r) {
                           d(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
                           d.row(r) *= g * w[static_cast<std::size_t>(r)];
                         }
                         t.accumulate(iz, d);
                       });
}

/// sum 1/2 (mu^2 + exp(logvar) - 1 - logvar): KL of N(mu, diag exp(logvar)) from N(0, I).
inline Var gaussian_kl(Var mu, Var logvar) {
  detail::same_shape(mu, logvar, "gaussian_kl");
  const std::size_t im = mu.id(), il = logvar.id();
  const auto m = mu.value().array();
  const auto lv = logvar.value().array();
  Mat out(1, 1);
  out(0, 0) = 0.5 * (m.square() + lv.exp() - 1.0 - lv).sum();
  return mu.tape().push(std::move(out), {im, il}, [im, il](Tape& t, std::size_t self) {
    const double g = t.node(self).grad(0, 0);
    if (t.requires_grad(im)) t.accumulate(im, g * t.value(im));
    if (t.requires_grad(il)) t.accumulate(il, (0.5 * g * (t.value(il).array().exp() - 1.0)).matrix());
  });
}

}  // namespace seqcl::ad
