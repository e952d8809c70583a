// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Sequential VAE pieces for generative replay. The main network doubles as the encoder:
// its encoder head emits xi_t = (mu_t | logvar_t) from the layer output at every step.
// The decoder is a separate recurrent net fed (z_t, one-hot task id).

#pragma once

#include <string>
#include <vector>

#include "seqcl/core/rng.hpp"
#include "seqcl/data/copy_task.hpp"
#include "seqcl/models/losses.hpp"
#include "seqcl/models/rnn.hpp"

namespace seqcl::cl {

enum class Likelihood { gaussian, bernoulli };

inline Likelihood parse_likelihood(const std::string& s) {
  if (s == "gaussian") return Likelihood::gaussian;
  if (s == "bernoulli") return Likelihood::bernoulli;
  throw ConfigError("unknown likelihood '" + s + "' (expected gaussian or bernoulli)");
}

/// Decoder for a latent of width n_z, emitting F_in values per step for one of K tasks.
inline models::RnnArch decoder_arch(int n_z, int n_hidden, int f_in, int num_tasks) {
  models::RnnArch a;
  a.kind = models::CellKind::vanilla;
  a.n_in = n_z;
  a.n_hidden = n_hidden;
  a.n_out = f_in;
  a.num_heads = 1;
  a.task_id_dims = num_tasks;
  return a;
}

inline ad::Var enc_mu(ad::Var xi, int n_z) { return ad::slice_cols(xi, 0, n_z); }
inline ad::Var enc_logvar(ad::Var xi, int n_z) { return ad::slice_cols(xi, n_z, n_z); }

/// sum_t KL(N(mu_t, diag sigma_t^2) || N(0, I)).
inline ad::Var vae_prior_match(ad::Tape& tape, const std::vector<ad::Var>& xi, int n_z) {
  ad::Var total = tape.constant(Mat::Zero(1, 1));
  for (const auto& x : xi) {
    SEQCL_CHECK(x.valid() && x.cols() == 2 * n_z, "vae_prior_match: xi must hold mu and logvar");
    total = ad::add(total, ad::gaussian_kl(enc_mu(x, n_z), enc_logvar(x, n_z)));
  }
  return total;
}

/// gaussian: sum_t tau/2 ||x_t - phi_t||^2 with phi the decoder mean;
/// bernoulli: sum_{t,f} BCE(x, sigmoid(phi)) with phi the decoder logits.
inline ad::Var vae_recon_loss(ad::Tape& tape, const std::vector<Mat>& x, const std::vector<ad::Var>& phi,
                              Likelihood lik, double tau = 1.0) {
  SEQCL_CHECK(x.size() == phi.size(), "vae_recon_loss: sequence length mismatch");
  ad::Var total = tape.constant(Mat::Zero(1, 1));
  for (std::size_t t = 0; t < x.size(); ++t) {
    SEQCL_CHECK(phi[t].rows() == x[t].rows() && phi[t].cols() == x[t].cols(), "vae_recon_loss: shape mismatch");
    const Mat ones = Mat::Ones(x[t].rows(), x[t].cols());
    const ad::Var term = lik == Likelihood::gaussian ? ad::weighted_sq_dist(phi[t], x[t], 0.5 * tau * ones)
                                                     : ad::bce_with_logits(phi[t], x[t], ones);
    total = ad::add(total, term);
  }
  return total;
}

/// z = mu + exp(logvar / 2) * eps with eps supplied by the caller.
inline ad::Var reparameterize(ad::Var xi, int n_z, const Mat& eps) {
  const ad::Var sd = ad::exp(ad::scale(enc_logvar(xi, n_z), 0.5));
  return ad::add(enc_mu(xi, n_z), ad::mul_const(sd, eps));
}

enum class ReplayMode { sample, threshold };

inline ReplayMode parse_replay_mode(const std::string& s) {
  if (s == "sample") return ReplayMode::sample;
  if (s == "threshold") return ReplayMode::threshold;
  throw ConfigError("unknown replay mode '" + s + "' (expected sample or threshold)");
}

/// n synthetic input sequences of length T for `task` from a (frozen) decoder.
/// z_t ~ N(0, I) independently per step. Time-major, n x F_in per step.
inline std::vector<Mat> replay_sample(const models::RnnArch& dec, const ParamVector& dec_params, int task, int T,
                                      int n, Rng& rng, Likelihood lik, ReplayMode mode = ReplayMode::threshold) {
  std::vector<Mat> z;
  z.reserve(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) z.push_back(randn(n, dec.n_in, rng));
  models::ForwardOptions opt;
  opt.task_id = task;
  std::vector<Mat> phi = models::predict(dec, dec_params, z, 0, opt);
  if (lik == Likelihood::gaussian) return phi;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& p : phi) {
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      const double prob = ad::sigmoid_scalar(p.data()[k]);
      p.data()[k] = mode == ReplayMode::threshold ? (prob >= 0.5 ? 1.0 : 0.0) : (u(rng) < prob ? 1.0 : 0.0);
    }
  }
  return phi;
}

/// Reconstruction term of one minibatch: latents reparameterized from the encoder outputs
/// `enc`, decoded for `task` and scored against the encoder input x.
inline ad::Var vae_recon_term(const models::RnnArch& dec_arch, const ParamViews& dec, const std::vector<Mat>& x,
                              const std::vector<ad::Var>& enc, int task, Likelihood lik, double tau, Rng& noise) {
  const int nz = dec_arch.n_in;
  std::vector<ad::Var> z;
  z.reserve(enc.size());
  for (const auto& xi : enc) z.push_back(reparameterize(xi, nz, randn(xi.rows(), nz, noise)));
  models::ForwardOptions opt;
  opt.task_id = task;
  const models::SeqOutput d = models::forward_sequence(dec_arch, dec, z, 0, opt);
  return vae_recon_loss(dec.flat().tape(), x, d.logits, lik, tau);
}

struct RtfWeights {
  double distill = 1.0;
  double rec = 1.0;
  double pm = 1.0;
  Likelihood likelihood = Likelihood::bernoulli;
  double tau = 1.0;
};

/// Training loss of the main network (also the encoder) and the decoder on one step:
///   task BCE / B  +  distill * sum_replay soft-target BCE / B
///   + rec * (reconstruction sum) / N  +  pm * (prior-matching sum) / N
/// where B is the current batch size and N counts current and replayed sequences.
/// `replay` holds one batch per earlier task, with soft targets in y.
inline ad::Var rtf_loss(const models::RnnArch& arch, const ParamViews& psi, const models::RnnArch& dec_arch,
                        const ParamViews& dec, const data::Batch& current, const std::vector<data::Batch>& replay,
                        const RtfWeights& wts, Rng& noise) {
  SEQCL_CHECK(arch.vae_latent == dec_arch.n_in, "rtf_loss: encoder and decoder latent widths differ");
  ad::Tape& tape = psi.flat().tape();
  const int nz = arch.vae_latent;
  const auto B = static_cast<double>(current.size());
  const models::SeqOutput out = models::forward_sequence(arch, psi, current.x, current.task_id);
  ad::Var loss = ad::scale(models::batch_bce_loss(tape, out.logits, current), 1.0 / B);
  ad::Var rec = vae_recon_term(dec_arch, dec, current.x, out.enc, current.task_id, wts.likelihood, wts.tau, noise);
  ad::Var pm = vae_prior_match(tape, out.enc, nz);
  double n = B;
  if (!replay.empty()) {
    ad::Var distill = tape.constant(Mat::Zero(1, 1));
    for (const auto& rb : replay) {
      const models::SeqOutput r = models::forward_sequence(arch, psi, rb.x, rb.task_id);
      distill = ad::add(distill, models::batch_bce_loss(tape, r.logits, rb));
      rec = ad::add(rec, vae_recon_term(dec_arch, dec, rb.x, r.enc, rb.task_id, wts.likelihood, wts.tau, noise));
      pm = ad::add(pm, vae_prior_match(tape, r.enc, nz));
      n += static_cast<double>(rb.size());
    }
    loss = ad::add(loss, ad::scale(distill, wts.distill / B));
  }
  loss = ad::add(loss, ad::scale(rec, wts.rec / n));
  return ad::add(loss, ad::scale(pm, wts.pm / n));
}

}  // namespace seqcl::cl
