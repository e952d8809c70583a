// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "seqcl/core/finite_diff.hpp"
#include "seqcl/data/copy_task.hpp"
#include "seqcl/io/checkpoint.hpp"
#include "seqcl/models/losses.hpp"
#include "seqcl/models/rnn.hpp"

using namespace seqcl;
using namespace seqcl::models;
using Catch::Matchers::WithinAbs;

namespace {

struct VanillaLeaves {
  ad::Var x, h, w_xh, w_hh, b_h, w_ro, b_ro;
};

VanillaLeaves vanilla_leaves(ad::Tape& tape, int n, const Mat& x, const Mat& w_xh) {
  return {tape.constant(x),
          tape.constant(Mat::Zero(x.rows(), n)),
          tape.constant(w_xh),
          tape.constant(Mat::Zero(n, n)),
          tape.constant(Mat::Zero(n, 1)),
          tape.constant(Mat::Identity(n, n)),
          tape.constant(Mat::Zero(n, 1))};
}

data::Batch small_batch(const data::CopyConfig& cfg, int n, std::uint64_t seed, int task = 0) {
  const auto suite = data::make_task_suite(data::Variant::permuted, task + 1, cfg, 0, seed);
  Rng rng = make_rng(seed, "data");
  return data::gen_batch(cfg, suite[static_cast<std::size_t>(task)], n, rng);
}

}  // namespace

TEST_CASE("vanilla step closed forms", "[models]") {
  ad::Tape tape;
  SECTION("zero parameters and inputs") {
    auto v = vanilla_leaves(tape, 4, Mat::Zero(2, 4), Mat::Zero(4, 4));
    const auto [h, o] = rnn_step(v.x, v.h, v.w_xh, v.w_hh, v.b_h, v.w_ro, v.b_ro, nullptr);
    REQUIRE(h.value().isZero());
    REQUIRE(o.value().isZero());
  }
  SECTION("identity input weights") {
    auto v = vanilla_leaves(tape, 3, Mat::Constant(1, 3, 0.5), Mat::Identity(3, 3));
    const auto [h, o] = rnn_step(v.x, v.h, v.w_xh, v.w_hh, v.b_h, v.w_ro, v.b_ro, nullptr);
    for (int j = 0; j < 3; ++j) REQUIRE_THAT(h.value()(0, j), WithinAbs(0.46211715726000974, 1e-15));
    REQUIRE(o.value() == h.value());
  }
  SECTION("all-zero mask") {
    auto v = vanilla_leaves(tape, 3, Mat::Constant(2, 3, 0.9), Mat::Identity(3, 3));
    const Mat mask = Mat::Zero(2, 3);
    const auto [h, o] = rnn_step(v.x, v.h, v.w_xh, v.w_hh, v.b_h, v.w_ro, v.b_ro, &mask);
    REQUIRE(h.value().isZero());
    REQUIRE(o.value().isZero());
  }
}

TEST_CASE("LSTM step closed forms", "[models]") {
  ad::Tape tape;
  const int n = 3;
  LstmWeights w;
  for (int k = 0; k < 4; ++k) {
    w.wx[k] = tape.constant(Mat::Zero(n, 2));
    w.wh[k] = tape.constant(Mat::Zero(n, n));
    w.b[k] = tape.constant(Mat::Zero(n, 1));
  }
  const ad::Var x = tape.constant(Mat::Zero(1, 2)), h0 = tape.constant(Mat::Zero(1, n));
  SECTION("zero everything") {
    const auto [h, c] = lstm_step(x, h0, tape.constant(Mat::Zero(1, n)), w, nullptr);
    REQUIRE(h.value().isZero());
    REQUIRE(c.value().isZero());
  }
  SECTION("saturated forget gate keeps the cell") {
    w.b[1] = tape.constant(Mat::Constant(n, 1, 1e3));
    Mat c0(1, n);
    c0 << 0.3, -1.2, 2.0;
    const auto [h, c] = lstm_step(x, h0, tape.constant(c0), w, nullptr);
    REQUIRE((c.value() - c0).cwiseAbs().maxCoeff() < 1e-15);
    (void)h;
  }
  SECTION("all-zero mask") {
    const Mat mask = Mat::Zero(1, n);
    const auto [h, c] = lstm_step(tape.constant(Mat::Ones(1, 2)), h0, tape.constant(Mat::Ones(1, n)), w, &mask);
    REQUIRE(h.value().isZero());
    REQUIRE_FALSE(c.value().isZero());
  }
}

TEST_CASE("forward_sequence edge cases", "[models]") {
  RnnArch arch;
  arch.n_hidden = 6;
  arch.num_heads = 2;
  const ParamLayout layout = arch.layout();
  ad::Tape tape;
  Rng rng = make_rng(1, "init");
  const ParamVector psi = init_params(arch, rng);
  const ad::Var flat = tape.leaf("psi", as_column(psi.entries()));
  const ParamViews pv(layout, flat);

  SECTION("empty sequence") {
    const SeqOutput out = forward_sequence(arch, pv, std::vector<Mat>{}, 0);
    REQUIRE(out.logits.empty());
    REQUIRE(out.hidden.size() == 1);
    REQUIRE(out.hidden[0].value().isZero());
  }
  SECTION("zero parameters give zero logits") {
    const ad::Var z = tape.leaf("z", Mat::Zero(layout.size(), 1));
    const data::Batch b = small_batch({2, 2, 8}, 3, 4);
    const SeqOutput out = forward_sequence(arch, ParamViews(layout, z), b.x, 1);
    REQUIRE(out.logits.size() == 5);
    REQUIRE(out.hidden.size() == 6);
    for (const auto& l : out.logits) REQUIRE(l.value().isZero());
  }
  SECTION("unknown head") {
    const data::Batch b = small_batch({2, 2, 8}, 1, 4);
    REQUIRE_THROWS(forward_sequence(arch, pv, b.x, 2));
  }
  SECTION("single step is the step function followed by the head") {
    Rng xr = make_rng(2, "x");
    const Mat x = randn(2, arch.n_in, xr);
    const SeqOutput out = forward_sequence(arch, pv, std::vector<Mat>{x}, 1);
    const Mat h = (x * psi.view("W_xh").transpose() + Mat(psi.view("b_h").transpose()).replicate(2, 1)).array().tanh().matrix();
    const Mat o = h * psi.view("W_ro").transpose() + Mat(psi.view("b_ro").transpose()).replicate(2, 1);
    const Mat z = o * psi.view("head1/W").transpose() + Mat(psi.view("head1/b").transpose()).replicate(2, 1);
    REQUIRE((out.hidden[1].value() - h).cwiseAbs().maxCoeff() < 1e-14);
    REQUIRE((out.logits[0].value() - z).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("forward_sequence is deterministic", "[models][property]") {
  RnnArch arch;
  arch.kind = CellKind::lstm;
  arch.n_hidden = 5;
  Rng rng = make_rng(3, "init");
  const ParamVector psi = init_params(arch, rng);
  const data::Batch b = small_batch({3, 4, 8}, 4, 2);
  const auto a = predict(arch, psi, b.x, 0);
  const auto c = predict(arch, psi, b.x, 0);
  for (std::size_t t = 0; t < a.size(); ++t) REQUIRE(a[t] == c[t]);
}

TEST_CASE("task identity input widens the input layer", "[models]") {
  RnnArch arch;
  arch.n_hidden = 4;
  arch.num_heads = 3;
  arch.task_id_dims = 3;
  REQUIRE(arch.layout().find("W_xh").cols == 11);
  Rng rng = make_rng(3, "init");
  const ParamVector psi = init_params(arch, rng);
  const data::Batch b = small_batch({2, 2, 8}, 2, 1);
  const auto l0 = predict(arch, psi, b.x, 0);
  const auto l2 = predict(arch, psi, b.x, 2);
  REQUIRE(l0.back() != l2.back());
}

TEST_CASE("orthogonal recurrent weights preserve norms", "[models][property]") {
  RnnArch arch;
  arch.n_hidden = 16;
  Rng rng = make_rng(5, "init");
  const ParamVector psi = init_params(arch, rng, true);
  const Mat w = psi.view("W_hh");
  for (int k = 0; k < 10; ++k) {
    const Vec h = as_vec(randn(16, 1, rng));
    REQUIRE_THAT((w * h).norm(), WithinAbs(h.norm(), 1e-12));
  }
}

TEST_CASE("sequence losses closed forms", "[models]") {
  ad::Tape tape;
  const ad::Var z = tape.leaf("z", Mat::Zero(3, 2));
  Mat y(3, 2), w = Mat::Zero(3, 2);
  y << 1, 0, 0, 1, 1, 1;
  w(2, 1) = 1.0;
  REQUIRE_THAT(ad::bce_with_logits(z, y, w).scalar(), WithinAbs(std::log(2.0), 1e-12));
  REQUIRE(ad::bce_with_logits(z, y, Mat::Zero(3, 2)).scalar() == 0.0);
  const ad::Var sat = tape.leaf("s", (80.0 * (2.0 * y.array() - 1.0)).matrix());
  REQUIRE(ad::bce_with_logits(sat, y, Mat::Ones(3, 2)).scalar() < 1e-30);

  const ad::Var u = tape.leaf("u", Mat::Zero(2, 4));
  REQUIRE_THAT(seq_xent_loss(u, {2, 0}, {1.0, 0.0}).scalar(), WithinAbs(std::log(4.0), 1e-12));
  REQUIRE(seq_xent_loss(u, {2, 0}, {0.0, 0.0}).scalar() == 0.0);
  Mat hot = Mat::Constant(1, 4, -60.0);
  hot(0, 1) = 60.0;
  REQUIRE(seq_xent_loss(tape.leaf("h", hot), {1}, {1.0}).scalar() < 1e-30);
  REQUIRE_THROWS(seq_xent_loss(u, {4, 0}, {1.0, 1.0}));
  REQUIRE_THROWS(seq_xent_loss(u, {-1, 0}, {1.0, 1.0}));
}

TEST_CASE("sample-level BCE equals the batch form", "[models]") {
  const data::CopyConfig cfg{3, 3, 5};
  Rng rng = make_rng(1, "d");
  const auto samples = data::gen_samples(cfg, {}, 2, rng);
  Rng zr = make_rng(2, "z");
  ad::Tape tape;
  const Mat z0 = randn(cfg.seq_len(), cfg.f_out(), zr), z1 = randn(cfg.seq_len(), cfg.f_out(), zr);
  const double s = seq_bce_loss(tape.constant(z0), samples[0]).scalar() + seq_bce_loss(tape.constant(z1), samples[1]).scalar();
  const data::Batch b = data::stack(samples, 0);
  std::vector<ad::Var> logits;
  for (int t = 0; t < cfg.seq_len(); ++t) {
    Mat zt(2, cfg.f_out());
    zt.row(0) = z0.row(t);
    zt.row(1) = z1.row(t);
    logits.push_back(tape.constant(zt));
  }
  REQUIRE_THAT(batch_bce_loss(tape, logits, b).scalar(), WithinAbs(s, 1e-12));
}

TEST_CASE("masked units receive exactly zero gradient", "[models][property]") {
  RnnArch arch;
  arch.n_hidden = 10;
  arch.num_heads = 2;
  const ParamLayout layout = arch.layout();
  Rng rng = make_rng(7, "init");
  const ParamVector psi = init_params(arch, rng);
  Mat mask = Mat::Ones(1, 10);
  const std::vector<int> off = {1, 4, 7};
  for (int j : off) mask(0, j) = 0.0;
  const data::Batch b = small_batch({3, 3, 8}, 4, 3, 1);

  ad::Tape tape;
  const ad::Var flat = tape.leaf("psi", as_column(psi.entries()));
  ForwardOptions opt;
  opt.mask = &mask;
  const SeqOutput out = forward_sequence(arch, ParamViews(layout, flat), b.x, 1, opt);
  const Vec g = as_vec(tape.backward(batch_bce_loss(tape, out.logits, b)).at("psi"));
  const ParamVector grad(layout, g);

  for (int j : off) {
    REQUIRE(grad.view("W_xh").row(j).isZero(0.0));
    REQUIRE(grad.view("W_hh").row(j).isZero(0.0));
    REQUIRE(grad.view("W_hh").col(j).isZero(0.0));
    REQUIRE(grad.view("b_h")(j, 0) == 0.0);
    REQUIRE(grad.view("W_ro").row(j).isZero(0.0));
    REQUIRE(grad.view("W_ro").col(j).isZero(0.0));
    REQUIRE(grad.view("b_ro")(j, 0) == 0.0);
    REQUIRE(grad.view("head1/W").col(j).isZero(0.0));
  }
  REQUIRE(grad.view("head0/W").isZero(0.0));
  REQUIRE_FALSE(grad.view("W_hh").row(0).isZero(0.0));
}

TEST_CASE("LSTM masking zeroes outgoing gradients of masked units", "[models][property]") {
  RnnArch arch;
  arch.kind = CellKind::lstm;
  arch.n_hidden = 6;
  const ParamLayout layout = arch.layout();
  Rng rng = make_rng(8, "init");
  const ParamVector psi = init_params(arch, rng);
  Mat mask = Mat::Ones(1, 6);
  mask(0, 2) = 0.0;
  const data::Batch b = small_batch({2, 3, 8}, 3, 5);
  ad::Tape tape;
  const ad::Var flat = tape.leaf("psi", as_column(psi.entries()));
  ForwardOptions opt;
  opt.mask = &mask;
  const SeqOutput out = forward_sequence(arch, ParamViews(layout, flat), b.x, 0, opt);
  const ParamVector grad(layout, as_vec(tape.backward(batch_bce_loss(tape, out.logits, b)).at("psi")));
  for (const char* g : {"W_hi", "W_hf", "W_hg", "W_ho"}) {
    REQUIRE(grad.view(g).col(2).isZero(0.0));
    REQUIRE(grad.view(g).row(2).isZero(0.0));
  }
  REQUIRE(grad.view("head0/W").col(2).isZero(0.0));
}

TEST_CASE("unrolled losses pass the gradient oracle", "[models][fd]") {
  const data::CopyConfig cfg{3, 4, 6};
  for (auto kind : {CellKind::vanilla, CellKind::lstm}) {
    RnnArch arch;
    arch.kind = kind;
    arch.n_in = cfg.f_in;
    arch.n_out = cfg.f_out();
    arch.n_hidden = 7;
    arch.num_heads = 2;
    const ParamLayout layout = arch.layout();
    Rng rng = make_rng(9, "init");
    const ParamVector psi = init_params(arch, rng);
    const data::Batch b = small_batch(cfg, 2, 6, 1);
    Mat mask = Mat::Ones(1, 7);
    mask(0, 3) = 0.0;
    const LossBuilder bce = [&](ad::Tape& tape, ad::Var p) {
      ForwardOptions opt;
      opt.mask = &mask;
      const auto out = forward_sequence(arch, ParamViews(layout, p), b.x, 1, opt);
      return ad::add(batch_bce_loss(tape, out.logits, b), orthogonal_penalty(arch, ParamViews(layout, p), 0.3));
    };
    REQUIRE(finite_diff_check(bce, psi.entries(), 1e-5).max_rel_error < 1e-4);

    const LossBuilder xent = [&](ad::Tape& tape, ad::Var p) {
      const auto out = forward_sequence(arch, ParamViews(layout, p), b.x, 0);
      ad::Var total = tape.constant(Mat::Zero(1, 1));
      for (std::size_t t = 0; t < out.logits.size(); ++t)
        total = ad::add(total, seq_xent_loss(out.logits[t], {static_cast<int>(t % 5), 2}, {1.0, 0.5}));
      return total;
    };
    REQUIRE(finite_diff_check(xent, psi.entries(), 1e-5).max_rel_error < 1e-4);
  }
}

TEST_CASE("parameter checkpoint files", "[models][io]") {
  RnnArch arch;
  arch.n_hidden = 5;
  arch.num_heads = 2;
  Rng rng = make_rng(10, "init");
  const ParamVector psi = init_params(arch, rng);
  const auto path = (std::filesystem::temp_directory_path() / "seqcl_test_ckpt.bin").string();
  io::save_checkpoint(path, io::param_sections(psi));
  ParamVector back(arch.layout());
  io::load_params(back, io::load_checkpoint(path));
  REQUIRE(back.entries() == psi.entries());
  std::filesystem::remove(path);

  const std::string bytes = io::encode_checkpoint(io::param_sections(psi));
  REQUIRE(bytes.substr(0, 8) == "SEQCLCKP");
  REQUIRE_THROWS(io::decode_checkpoint(bytes.substr(0, bytes.size() - 3)));
  REQUIRE_THROWS(io::decode_checkpoint(bytes + "x"));
  std::string bad = bytes;
  bad[0] = 'X';
  REQUIRE_THROWS(io::decode_checkpoint(bad));
  std::string v2 = bytes;
  v2[8] = 2;
  REQUIRE_THROWS(io::decode_checkpoint(v2));

  RnnArch bigger = arch;
  bigger.n_hidden = 6;
  ParamVector other(bigger.layout());
  REQUIRE_THROWS(io::load_params(other, io::decode_checkpoint(bytes)));
}
