// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Sequential training protocol. Every method trains tasks 0..K-1 in order (multitask: all
// at once), runs its consolidation hook once per task boundary and then scores every task
// learned so far on its fixed test set.
//
// Random streams (all derived from experiment.seed):
//   data        training minibatches          init        parameter initialization
//   test/<k>    test set of task k            masks/<k>   hidden-unit masks
//   fisher/<k>  Fisher estimation samples     coreset/<k> coreset contents
//   replay      replay batches                vae-noise   reparameterization noise
//   hnet-subset regularizer task subsets      task-suite  permutations

#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "seqcl/analysis/fisher_stats.hpp"
#include "seqcl/analysis/pca.hpp"
#include "seqcl/cl/coresets.hpp"
#include "seqcl/cl/ewc.hpp"
#include "seqcl/cl/masking.hpp"
#include "seqcl/cl/si.hpp"
#include "seqcl/cl/vae.hpp"
#include "seqcl/core/adam.hpp"
#include "seqcl/data/copy_task.hpp"
#include "seqcl/harness/config.hpp"
#include "seqcl/harness/record.hpp"
#include "seqcl/hnet/hypernet.hpp"
#include "seqcl/models/losses.hpp"
#include "seqcl/models/rnn.hpp"

namespace seqcl::harness {

/// Entries of the layout the optimizer may change while training `task`: everything except
/// the heads of other tasks.
inline TrainableMask trainable_for_task(const ParamLayout& layout, int task) {
  TrainableMask m = TrainableMask::Ones(layout.size());
  for (const auto& v : layout.views()) {
    if (v.name.rfind("head", 0) != 0) continue;
    const auto slash = v.name.find('/');
    const int k = std::stoi(v.name.substr(4, slash - 4));
    if (k != task) m.segment(v.offset, v.size()).setZero();
  }
  return m;
}

/// Fraction of correct recall-window bits over a whole test batch.
inline double evaluate_logits(const std::vector<Mat>& logits, const data::Batch& test) {
  data::BitCount c;
  for (std::size_t t = 0; t < logits.size(); ++t) {
    if ((test.w[t].array() == 0.0).all()) continue;
    const auto b = data::count_bits(logits[t], test.y[t], test.w[t]);
    c.correct += b.correct;
    c.total += b.total;
  }
  SEQCL_CHECK(c.total > 0, "evaluate: empty recall window");
  return static_cast<double>(c.correct) / static_cast<double>(c.total);
}

inline double evaluate(const models::RnnArch& arch, const ParamLayout& layout, const Vec& psi,
                       const data::Batch& test, int head, const Mat* mask = nullptr) {
  models::ForwardOptions opt;
  opt.mask = mask;
  opt.output_steps = models::weighted_steps(test.w);
  return evaluate_logits(models::predict(arch, layout, psi, test.x, head, opt), test);
}

/// Mean task loss of a batch (per-sample sum over steps and bits, averaged over samples).
inline ad::Var batch_task_loss(const models::RnnArch& arch, const ParamViews& pv, const data::Batch& b, int head,
                               const Mat* mask, models::SeqOutput* keep = nullptr, bool all_steps = false) {
  models::ForwardOptions opt;
  opt.mask = mask;
  if (!all_steps) opt.output_steps = models::weighted_steps(b.w);
  models::SeqOutput out = models::forward_sequence(arch, pv, b.x, head, opt);
  ad::Tape& tape = pv.flat().tape();
  ad::Var loss = ad::scale(models::batch_bce_loss(tape, out.logits, b), 1.0 / static_cast<double>(b.size()));
  if (keep) *keep = std::move(out);
  return loss;
}

/// Per-sample gradients of the sequence NLL (with labels) restricted to the first `prefix`
/// entries, squared and averaged: the empirical Fisher diagonal.
inline Vec model_fisher(const models::RnnArch& arch, const ParamVector& psi, const std::vector<data::Sample>& samples,
                        int head, const Mat* mask, Eigen::Index prefix) {
  SEQCL_CHECK(prefix >= 0 && prefix <= psi.size(), "model_fisher: prefix out of range");
  return cl::empirical_fisher(
      [&](int n) {
        const data::Batch b = data::stack({samples[static_cast<std::size_t>(n)]}, head);
        ad::Tape tape;
        const ad::Var flat = tape.leaf("psi", as_column(psi.entries()));
        const ParamViews pv(psi.layout(), flat);
        const ad::Var loss = batch_task_loss(arch, pv, b, head, mask);
        const auto g = tape.backward(loss);
        return Vec(as_vec(g.at("psi")).head(prefix));
      },
      static_cast<int>(samples.size()));
}

struct Progress {
  int task = -1;
  long iter = -1;
};

/// One training run. Construct, then call run() once.
class Experiment {
 public:
  explicit Experiment(ExperimentConfig cfg) : cfg_(std::move(cfg)) {
    suite_ = data::make_task_suite(cfg_.variant, cfg_.tasks, cfg_.copy,
                                   cfg_.variant == data::Variant::patman ? cfg_.r : 0, cfg_.seed);
    for (const auto& spec : suite_)
      tests_.push_back(data::stack(data::test_set(cfg_.copy, spec, cfg_.test_samples, cfg_.seed), spec.task_id));
    arch_ = cfg_.main_arch();
  }

  /// Called after every evaluation round with (task just trained, record so far).
  std::function<void(int, const RunRecord&)> on_task_end;
  /// Called with the main-network parameters right after task k is evaluated
  /// (single-network methods).
  std::function<void(int, const ParamVector&)> on_params;
  /// Replaces the seeded random masks of the masking methods.
  std::optional<cl::MaskSet> mask_override;

  [[nodiscard]] const std::vector<data::TaskSpec>& suite() const { return suite_; }
  [[nodiscard]] const std::vector<data::Batch>& test_sets() const { return tests_; }
  [[nodiscard]] const models::RnnArch& arch() const { return arch_; }

  /// Final main-network parameters (sequential single-model methods only).
  [[nodiscard]] const std::optional<ParamVector>& final_params() const { return final_psi_; }
  /// Final hypernetwork (hypernetwork method only).
  [[nodiscard]] const std::optional<hnet::Hypernet>& final_hnet() const { return final_hnet_; }
  /// Accumulated Fisher (EWC only).
  [[nodiscard]] const std::optional<cl::EwcState>& ewc_state() const { return ewc_; }

  RunRecord run() {
    RunRecord rec;
    rec.method = to_string(cfg_.method);
    rec.variant = data::to_string(cfg_.variant);
    rec.p = cfg_.copy.p;
    rec.i = cfg_.copy.i;
    rec.r = cfg_.variant == data::Variant::patman ? cfg_.r : 0;
    rec.seed = cfg_.seed;
    rec.config_hash = cfg_.hash();
    rec.config = cfg_.canonical();
    rec.init_matrix(cfg_.tasks);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      switch (cfg_.method) {
        case Method::from_scratch: run_from_scratch(rec); break;
        case Method::multitask: run_multitask(rec); break;
        case Method::hnet: run_hnet(rec); break;
        case Method::rtf: run_rtf(rec); break;
        default: run_single_model(rec); break;
      }
    } catch (const DivergenceError& e) {
      rec.status = "diverged";
      rec.failure = e.what();
      rec.failed_task = progress_.task;
      rec.failed_iter = progress_.iter;
      rec.init_matrix(cfg_.tasks);
    }
    rec.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
  }

 private:
  static void check_finite(const ad::Var& loss) {
    if (!std::isfinite(loss.scalar())) throw DivergenceError("seqcl: non-finite loss");
  }

  data::Batch next_batch(int task, Rng& rng) const {
    return data::gen_batch(cfg_.copy, suite_[static_cast<std::size_t>(task)], cfg_.batch, rng);
  }

  void finish_task(RunRecord& rec, int task) {
    if (on_task_end) on_task_end(task, rec);
  }

  // Fine-tuning, EWC, SI, masking, masking + SI and coresets share one parameter vector.
  void run_single_model(RunRecord& rec) {
    const Method m = cfg_.method;
    Rng init = make_rng(cfg_.seed, "init");
    Rng data_rng = make_rng(cfg_.seed, "data");
    Rng replay_rng = make_rng(cfg_.seed, "replay");
    ParamVector psi = models::init_params(arch_, init, cfg_.orth_init);
    const Eigen::Index shared = arch_.shared_size();

    const bool use_masks = m == Method::masking || m == Method::masking_si;
    const bool use_si = m == Method::si || m == Method::masking_si;
    cl::MaskSet masks;
    if (use_masks) masks = mask_override ? *mask_override : cl::make_mask_set(cfg_.tasks, cfg_.hidden, cfg_.mask_fraction, cfg_.seed);
    if (m == Method::ewc) ewc_ = cl::EwcState(shared, cfg_.ewc_lambda);
    std::optional<cl::SiState> si;
    if (use_si) si = cl::SiState(psi.entries().head(shared), cfg_.si_lambda, cfg_.si_eps, cfg_.si_denominator);
    cl::Coreset coreset;
    coreset.size = cfg_.coreset_size;
    coreset.lambda_distill = cfg_.coreset_lambda;

    for (int k = 0; k < cfg_.tasks; ++k) {
      progress_ = {k, -1};
      const Mat* mask = use_masks ? &masks.at(k) : nullptr;
      if (m == Method::coresets) {
        // Soft targets come from the parameters as they are right before task k.
        for (auto& entry : coreset.tasks)
          entry.soft_targets = cl::distill_targets(arch_, psi.layout(), psi.entries(), entry.samples, entry.task_id);
      }
      if (si) cl::si_begin_task(*si, psi.entries().head(shared));
      AdamState adam = make_adam(psi.size(), cfg_.lr);
      const TrainableMask trainable = trainable_for_task(psi.layout(), k);

      for (long it = 0; it < cfg_.iters; ++it) {
        progress_.iter = it;
        const data::Batch b = next_batch(k, data_rng);
        ad::Tape tape;
        const ad::Var flat = tape.leaf("psi", as_column(psi.entries()));
        const ParamViews pv(psi.layout(), flat);

        // Data-dependent part of the loss.
        ad::Var data_loss = batch_task_loss(arch_, pv, b, k, mask);
        if (m == Method::coresets && !coreset.tasks.empty()) {
          const auto groups = cl::replay_batches(coreset, cfg_.batch, replay_rng);
          std::vector<std::vector<ad::Var>> logits;
          for (const auto& g : groups) {
            models::ForwardOptions opt;
            opt.output_steps = models::weighted_steps(g.w);
            logits.push_back(models::forward_sequence(arch_, pv, g.x, g.task_id, opt).logits);
          }
          const ad::Var distill = cl::distill_loss(tape, logits, groups, coreset.lambda_distill);
          data_loss = ad::add(data_loss, ad::scale(distill, 1.0 / cfg_.batch));
        }
        check_finite(data_loss);

        // Parameter-only regularizers, differentiated separately so the task gradient is
        // available on its own.
        ad::Var reg = tape.constant(Mat::Zero(1, 1));
        if (cfg_.orth_reg > 0) reg = ad::add(reg, models::orthogonal_penalty(arch_, pv, cfg_.orth_reg));
        const ad::Var shared_view = ad::view(flat, 0, shared, 1);
        if (ewc_ && ewc_->active()) reg = ad::add(reg, cl::ewc_penalty(shared_view, *ewc_));
        if (si && si->active()) reg = ad::add(reg, cl::si_penalty(shared_view, *si));
        check_finite(reg);

        Vec g_task = as_vec(tape.backward(data_loss).at("psi"));
        Vec g = g_task + as_vec(tape.backward(reg).at("psi"));
        g = clip_global_norm(std::move(g), cfg_.clip);
        if (si) {
          // Importance uses the optimizer step the data loss alone would take.
          const Vec gt = clip_global_norm(g_task, cfg_.clip);
          const Vec step = adam_peek(psi.layout(), gt, adam, trainable);
          cl::si_track_step(*si, gt.head(shared), step.head(shared));
        }
        adam_step(psi, g, adam, trainable);
      }

      // Consolidation hooks.
      if (ewc_) {
        Rng frng = make_rng(cfg_.seed, "fisher/" + std::to_string(k));
        const int n = cfg_.fisher_samples;
        const auto samples = data::gen_samples(cfg_.copy, suite_[static_cast<std::size_t>(k)], n, frng);
        cl::ewc_accumulate(*ewc_, model_fisher(arch_, psi, samples, k, mask, shared), psi.entries().head(shared));
      }
      if (si) cl::si_consolidate(*si, psi.entries().head(shared));
      if (m == Method::coresets) {
        Rng crng = make_rng(cfg_.seed, "coreset/" + std::to_string(k));
        cl::CoresetEntry entry;
        entry.task_id = k;
        const auto pool = data::gen_samples(cfg_.copy, suite_[static_cast<std::size_t>(k)], coreset.size, crng);
        entry.samples = cl::coreset_build(pool, coreset.size, crng);
        coreset.tasks.push_back(std::move(entry));
      }

      for (int j = 0; j <= k; ++j)
        rec.set(j, k, evaluate(arch_, psi.layout(), psi.entries(), tests_[static_cast<std::size_t>(j)], j,
                               use_masks ? &masks.at(j) : nullptr));
      if (on_params) on_params(k, psi);
      finish_task(rec, k);
    }
    final_psi_ = std::move(psi);
  }

  // Trains a fresh model per task; each model is only ever scored on its own task.
  void run_from_scratch(RunRecord& rec) {
    Rng data_rng = make_rng(cfg_.seed, "data");
    for (int k = 0; k < cfg_.tasks; ++k) {
      progress_ = {k, -1};
      Rng init = make_rng(cfg_.seed, "init/" + std::to_string(k));
      ParamVector psi = models::init_params(arch_, init, cfg_.orth_init);
      AdamState adam = make_adam(psi.size(), cfg_.lr);
      const TrainableMask trainable = trainable_for_task(psi.layout(), k);
      for (long it = 0; it < cfg_.iters; ++it) {
        progress_.iter = it;
        const data::Batch b = next_batch(k, data_rng);
        ad::Tape tape;
        const ad::Var flat = tape.leaf("psi", as_column(psi.entries()));
        const ParamViews pv(psi.layout(), flat);
        ad::Var loss = batch_task_loss(arch_, pv, b, k, nullptr);
        if (cfg_.orth_reg > 0) loss = ad::add(loss, models::orthogonal_penalty(arch_, pv, cfg_.orth_reg));
        check_finite(loss);
        const Vec g = clip_global_norm(as_vec(tape.backward(loss).at("psi")), cfg_.clip);
        adam_step(psi, g, adam, trainable);
      }
      const double acc = evaluate(arch_, psi.layout(), psi.entries(), tests_[static_cast<std::size_t>(k)], k);
      for (int j = k; j < cfg_.tasks; ++j) rec.set(k, j, acc);
      finish_task(rec, k);
    }
  }

  // Joint training; every minibatch holds floor(B/K) or ceil(B/K) samples of each task.
  // Runs K * iters steps so the sample budget matches the sequential methods.
  void run_multitask(RunRecord& rec) {
    Rng init = make_rng(cfg_.seed, "init");
    Rng data_rng = make_rng(cfg_.seed, "data");
    ParamVector psi = models::init_params(arch_, init, cfg_.orth_init);
    AdamState adam = make_adam(psi.size(), cfg_.lr);
    progress_ = {0, -1};
    const long total = static_cast<long>(cfg_.iters) * cfg_.tasks;
    for (long it = 0; it < total; ++it) {
      progress_.iter = it;
      const auto counts = multitask_counts(cfg_.batch, cfg_.tasks, it);
      ad::Tape tape;
      const ad::Var flat = tape.leaf("psi", as_column(psi.entries()));
      const ParamViews pv(psi.layout(), flat);
      ad::Var loss = tape.constant(Mat::Zero(1, 1));
      for (int k = 0; k < cfg_.tasks; ++k) {
        const int n = counts[static_cast<std::size_t>(k)];
        if (n == 0) continue;
        const data::Batch b = data::gen_batch(cfg_.copy, suite_[static_cast<std::size_t>(k)], n, data_rng);
        loss = ad::add(loss, ad::scale(batch_task_loss(arch_, pv, b, k, nullptr), static_cast<double>(n) / cfg_.batch));
      }
      if (cfg_.orth_reg > 0) loss = ad::add(loss, models::orthogonal_penalty(arch_, pv, cfg_.orth_reg));
      check_finite(loss);
      const Vec g = clip_global_norm(as_vec(tape.backward(loss).at("psi")), cfg_.clip);
      adam_step(psi, g, adam);
    }
    for (int k = 0; k < cfg_.tasks; ++k) {
      const double acc = evaluate(arch_, psi.layout(), psi.entries(), tests_[static_cast<std::size_t>(k)], k);
      for (int j = k; j < cfg_.tasks; ++j) rec.set(k, j, acc);
    }
    finish_task(rec, cfg_.tasks - 1);
    final_psi_ = std::move(psi);
  }

 public:
  /// Per-task sample counts of multitask minibatch `it`; the remainder rotates over tasks.
  static std::vector<int> multitask_counts(int batch, int tasks, long it) {
    std::vector<int> c(static_cast<std::size_t>(tasks), batch / tasks);
    const int extra = batch % tasks;
    for (int e = 0; e < extra; ++e) c[static_cast<std::size_t>((it * extra + e) % tasks)] += 1;
    return c;
  }

 private:
  // The hypernetwork generates a single-head main network per task from its embedding.
  void run_hnet(RunRecord& rec) {
    Rng init = make_rng(cfg_.seed, "init");
    Rng data_rng = make_rng(cfg_.seed, "data");
    Rng subset_rng = make_rng(cfg_.seed, "hnet-subset");
    const models::RnnArch target = arch_.single_head();
    const ParamLayout target_layout = target.layout();
    hnet::Hypernet net(cfg_.hnet, target_layout.size(), cfg_.tasks, init);

    for (int k = 0; k < cfg_.tasks; ++k) {
      progress_ = {k, -1};
      AdamState adam_t = make_adam(net.theta().size(), cfg_.lr);
      AdamState adam_e = make_adam(net.embeddings().size(), cfg_.lr);
      TrainableMask emb_mask = TrainableMask::Zero(net.embeddings().size());
      emb_mask.head((k + 1) * cfg_.hnet.task_emb_dim).setOnes();  // current and previous embeddings
      for (long it = 0; it < cfg_.iters; ++it) {
        progress_.iter = it;
        const data::Batch b = next_batch(k, data_rng);
        ad::Tape tape;
        const ad::Var th = tape.leaf("theta", as_column(net.theta().entries()));
        const ad::Var em = tape.leaf("emb", as_column(net.embeddings().entries()));
        const ParamViews tv(net.theta().layout(), th), ev(net.embeddings().layout(), em);
        const ad::Var psi = hnet::generate(cfg_.hnet, target_layout.size(), tv, ev[hnet::Hypernet::emb_name(k)]);
        const ParamViews pv(target_layout, psi);
        ad::Var loss = batch_task_loss(target, pv, b, 0, nullptr);
        if (cfg_.orth_reg > 0) loss = ad::add(loss, models::orthogonal_penalty(target, pv, cfg_.orth_reg));
        if (k > 0 && cfg_.hnet_beta > 0) {
          std::vector<int> subset;
          if (cfg_.hnet_subset > 0 && cfg_.hnet_subset < k) subset = hnet::sample_task_subset(k, cfg_.hnet_subset, subset_rng);
          loss = ad::add(loss, hnet::hnet_regularizer(net, tv, ev, k, cfg_.hnet_beta, subset));
        }
        check_finite(loss);
        const auto grads = tape.backward(loss);
        Vec gt = as_vec(grads.at("theta")), ge = as_vec(grads.at("emb"));
        ge.array() *= emb_mask;
        const double norm = std::sqrt(gt.squaredNorm() + ge.squaredNorm());
        if (norm > cfg_.clip) {
          gt *= cfg_.clip / norm;
          ge *= cfg_.clip / norm;
        }
        adam_step(net.theta(), gt, adam_t);
        adam_step(net.embeddings(), ge, adam_e, emb_mask);
      }
      net.checkpoint(k + 1);
      for (int j = 0; j <= k; ++j)
        rec.set(j, k, evaluate(target, target_layout, net.generate_weights(j), tests_[static_cast<std::size_t>(j)], 0));
      finish_task(rec, k);
    }
    final_hnet_ = std::move(net);
  }

  // Generative replay: the main network doubles as the VAE encoder; a decoder conditioned on
  // the task id replays inputs of earlier tasks, labelled by the pre-task main network.
  void run_rtf(RunRecord& rec) {
    Rng init = make_rng(cfg_.seed, "init");
    Rng data_rng = make_rng(cfg_.seed, "data");
    Rng replay_rng = make_rng(cfg_.seed, "replay");
    Rng noise_rng = make_rng(cfg_.seed, "vae-noise");
    ParamVector psi = models::init_params(arch_, init, cfg_.orth_init);
    const models::RnnArch dec_arch = cl::decoder_arch(cfg_.rtf_latent, cfg_.rtf_decoder_hidden, cfg_.copy.f_in, cfg_.tasks);
    ParamVector dec = models::init_params(dec_arch, init, cfg_.orth_init);
    const cl::RtfWeights wts{cfg_.rtf_lambda_distill, cfg_.rtf_lambda_rec, cfg_.rtf_lambda_pm, cfg_.rtf_likelihood,
                             cfg_.rtf_tau};
    const int T = cfg_.copy.seq_len();
    // Loss weights of a replayed sample: the recall window.
    const data::Sample shape = data::sample_from_pattern(cfg_.copy, suite_.front(), Mat::Zero(cfg_.copy.p, cfg_.copy.f_out()));

    for (int k = 0; k < cfg_.tasks; ++k) {
      progress_ = {k, -1};
      const Vec psi_frozen = psi.entries();
      const ParamVector dec_frozen = dec;
      AdamState adam = make_adam(psi.size(), cfg_.lr);
      AdamState adam_d = make_adam(dec.size(), cfg_.lr);
      const TrainableMask trainable = trainable_for_task(psi.layout(), k);

      for (long it = 0; it < cfg_.iters; ++it) {
        progress_.iter = it;
        const data::Batch b = next_batch(k, data_rng);
        std::vector<data::Batch> replay;
        if (k > 0) {
          std::vector<int> per_task(static_cast<std::size_t>(k), 0);
          for (int n = 0; n < cfg_.batch; ++n) per_task[replay_rng() % static_cast<std::uint64_t>(k)] += 1;
          for (int j = 0; j < k; ++j) {
            const int n = per_task[static_cast<std::size_t>(j)];
            if (n == 0) continue;
            data::Batch rb;
            rb.task_id = j;
            rb.x = cl::replay_sample(dec_arch, dec_frozen, j, T, n, replay_rng, cfg_.rtf_likelihood, cfg_.rtf_replay_mode);
            const auto soft = models::predict(arch_, psi.layout(), psi_frozen, rb.x, j);
            for (int t = 0; t < T; ++t) {
              rb.y.push_back(ad::sigmoid_mat(soft[static_cast<std::size_t>(t)]));
              rb.w.push_back(shape.loss_weight.row(t).replicate(n, 1));
            }
            replay.push_back(std::move(rb));
          }
        }
        ad::Tape tape;
        const ad::Var flat = tape.leaf("psi", as_column(psi.entries()));
        const ad::Var dflat = tape.leaf("dec", as_column(dec.entries()));
        const ParamViews pv(psi.layout(), flat), dv(dec.layout(), dflat);
        ad::Var loss = cl::rtf_loss(arch_, pv, dec_arch, dv, b, replay, wts, noise_rng);
        if (cfg_.orth_reg > 0) {
          loss = ad::add(loss, models::orthogonal_penalty(arch_, pv, cfg_.orth_reg));
          loss = ad::add(loss, models::orthogonal_penalty(dec_arch, dv, cfg_.orth_reg));
        }
        check_finite(loss);
        const auto grads = tape.backward(loss);
        Vec g = as_vec(grads.at("psi")), gd = as_vec(grads.at("dec"));
        g.array() *= trainable;
        const double norm = std::sqrt(g.squaredNorm() + gd.squaredNorm());
        if (norm > cfg_.clip) {
          g *= cfg_.clip / norm;
          gd *= cfg_.clip / norm;
        }
        adam_step(psi, g, adam, trainable);
        adam_step(dec, gd, adam_d);
      }
      for (int j = 0; j <= k; ++j)
        rec.set(j, k, evaluate(arch_, psi.layout(), psi.entries(), tests_[static_cast<std::size_t>(j)], j));
      if (on_params) on_params(k, psi);
      finish_task(rec, k);
    }
    final_psi_ = std::move(psi);
  }

  ExperimentConfig cfg_;
  std::vector<data::TaskSpec> suite_;
  std::vector<data::Batch> tests_;
  models::RnnArch arch_;
  Progress progress_;
  std::optional<ParamVector> final_psi_;
  std::optional<cl::EwcState> ewc_;
  std::optional<hnet::Hypernet> final_hnet_;
};

inline RunRecord run_experiment(const ExperimentConfig& cfg) { return Experiment(cfg).run(); }

/// Diagnostics of a network trained on one task: Fisher of the recurrent weights and the
/// intrinsic dimension of the hidden state at every step of the test inputs.
struct SingleTaskAnalysis {
  RunRecord record;
  double mean_fisher_whh = 0.0;
  analysis::FisherStats fisher;
  std::vector<int> intrinsic_dims;  // per input step
  int stop_dim = 0;                 // at the stop-flag step
};

inline SingleTaskAnalysis single_task_analysis(ExperimentConfig cfg, double pca_threshold = 0.75) {
  SEQCL_CHECK(cfg.method == Method::finetune, "single_task_analysis: method must be finetune");
  SEQCL_CHECK(cfg.kind == models::CellKind::vanilla, "single_task_analysis: needs a vanilla RNN");
  cfg.tasks = 1;
  cfg.raw.values["experiment.tasks"] = "1";
  Experiment ex(cfg);
  SingleTaskAnalysis out;
  out.record = ex.run();
  if (!out.record.ok()) return out;
  const ParamVector& psi = *ex.final_params();
  Rng frng = make_rng(cfg.seed, "fisher/0");
  const auto samples = data::gen_samples(cfg.copy, ex.suite().front(), cfg.fisher_samples, frng);
  const Vec f = model_fisher(ex.arch(), psi, samples, 0, nullptr, psi.size());
  out.fisher = analysis::fisher_stats(f, psi.layout(), "W_hh");
  out.mean_fisher_whh = out.fisher.mean;

  const data::Batch& test = ex.test_sets().front();
  ad::Tape tape;
  const ad::Var flat = tape.leaf("psi", as_column(psi.entries()), false);
  const models::SeqOutput seq = models::forward_sequence(ex.arch(), ParamViews(psi.layout(), flat), test.x, 0);
  std::vector<Mat> trace;
  for (std::size_t t = 1; t < seq.hidden.size(); ++t) trace.push_back(seq.hidden[t].value());
  out.intrinsic_dims = analysis::intrinsic_dim_per_step(trace, pca_threshold);
  out.stop_dim = out.intrinsic_dims[static_cast<std::size_t>(cfg.copy.stop_step())];
  return out;
}

}  // namespace seqcl::harness
