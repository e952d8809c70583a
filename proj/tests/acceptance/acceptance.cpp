// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite. `seqcl_acceptance [N ...]` checks the listed criteria (all when none are
// given) and prints one PASS/FAIL line per criterion. Exit status is nonzero if any fails.
//
// Criteria 6 and 7 share their trained networks through a cache file in the working
// directory, stamped with the build time so a rebuilt binary never reuses stale results.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "seqcl/analysis/queue_rnn.hpp"
#include "seqcl/analysis/subspace.hpp"
#include "seqcl/cl/vae.hpp"
#include "seqcl/core/finite_diff.hpp"
#include "seqcl/harness/experiment.hpp"

namespace {

using namespace seqcl;
using harness::ExperimentConfig;
using harness::RawConfig;

// Tolerances and thresholds, one place.
constexpr double kFdStep = 1e-5;
constexpr double kFdTol = 1e-4;
constexpr double kTheoryTol = 1e-10;
constexpr double kOracleTol = 1e-12;
constexpr int kSeeds[] = {1, 2, 3};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

ExperimentConfig make_config(const std::vector<std::string>& sets) {
  RawConfig raw;
  for (const auto& s : sets) harness::apply_assignment(raw, s);
  return harness::materialize(raw);
}

// ---------------------------------------------------------------------------------------
// 1. Gradient oracle

struct FdCase {
  std::string name;
  LossBuilder loss;
  Vec params;
};

models::RnnArch small_arch(int vae_latent = 0) {
  models::RnnArch a;
  a.n_in = 8;
  a.n_hidden = 16;
  a.n_out = 7;
  a.num_heads = 2;
  a.vae_latent = vae_latent;
  return a;
}

data::Batch small_batch(int task, int n, std::uint64_t seed) {
  const data::CopyConfig cc{3, 3, 8};
  const auto suite = data::make_task_suite(data::Variant::permuted, 2, cc, 0, seed);
  Rng rng = make_rng(seed, "fd-data");
  return data::gen_batch(cc, suite[static_cast<std::size_t>(task)], n, rng);
}

Vec perturbed(const Vec& v, double scale, std::uint64_t seed) {
  Rng rng = make_rng(seed, "fd-perturb");
  return v + as_vec(randn(v.size(), 1, rng, scale));
}

std::vector<FdCase> gradient_cases() {
  std::vector<FdCase> cases;
  const models::RnnArch arch = small_arch();
  const ParamLayout layout = arch.layout();
  Rng init = make_rng(7, "init");
  const Vec psi0 = perturbed(models::init_params(arch, init).entries(), 0.1, 1);
  const Eigen::Index shared = arch.shared_size();
  const data::Batch b = small_batch(1, 4, 3);

  auto task_loss = [arch, layout, b](ad::Tape&, ad::Var p) {
    return harness::batch_task_loss(arch, ParamViews(layout, p), b, 1, nullptr);
  };
  cases.push_back({"BCE task loss", task_loss, psi0});

  Rng r = make_rng(11, "fd-state");
  cl::EwcState ewc(shared, 3.0);
  cl::ewc_accumulate(ewc, as_vec(rand_uniform(shared, 1, r, 0.0, 2.0)), perturbed(psi0.head(shared), 0.2, 2));
  cases.push_back({"EWC penalty", [task_loss, ewc, shared](ad::Tape& t, ad::Var p) {
                     return ad::add(task_loss(t, p), cl::ewc_penalty(ad::view(p, 0, shared, 1), ewc));
                   },
                   psi0});

  cl::SiState si(perturbed(psi0.head(shared), 0.2, 3), 2.0);
  si.omega = as_vec(rand_uniform(shared, 1, r, -0.5, 1.0));
  cl::si_consolidate(si, perturbed(psi0.head(shared), 0.2, 4));
  cases.push_back({"SI penalty", [task_loss, si, shared](ad::Tape& t, ad::Var p) {
                     return ad::add(task_loss(t, p), cl::si_penalty(ad::view(p, 0, shared, 1), si));
                   },
                   psi0});

  // Hypernetwork: task loss on generated weights plus the output regularizer, w.r.t. theta
  // and the embeddings at once.
  {
    const models::RnnArch target = arch.single_head();
    const ParamLayout tl = target.layout();
    hnet::HnetArch ha;
    ha.hidden = {4};
    ha.chunk_out = 100;
    ha.task_emb_dim = 4;
    ha.chunk_emb_dim = 4;
    Rng hr = make_rng(5, "init");
    auto net = std::make_shared<hnet::Hypernet>(ha, tl.size(), 2, hr);
    net->checkpoint(1);
    net->theta().entries() = perturbed(net->theta().entries(), 0.05, 5);
    const Eigen::Index nt = net->theta().size(), ne = net->embeddings().size();
    Vec params(nt + ne);
    params << net->theta().entries(), net->embeddings().entries();
    const data::Batch hb = small_batch(1, 4, 4);
    cases.push_back({"hypernetwork regularizer", [net, target, tl, hb, nt, ne, ha](ad::Tape&, ad::Var p) {
                       const ParamViews tv(net->theta().layout(), ad::view(p, 0, nt, 1));
                       const ParamViews ev(net->embeddings().layout(), ad::view(p, nt, ne, 1));
                       const ad::Var w = hnet::generate(ha, tl.size(), tv, ev[hnet::Hypernet::emb_name(1)]);
                       const ad::Var task = harness::batch_task_loss(target, ParamViews(tl, w), hb, 0, nullptr);
                       return ad::add(task, hnet::hnet_regularizer(*net, tv, ev, 1, 0.7));
                     },
                     params});
  }

  // Generative replay: encoder/main network and decoder together, one replayed task.
  {
    const models::RnnArch enc = small_arch(3);
    const ParamLayout el = enc.layout();
    const models::RnnArch dec = cl::decoder_arch(3, 8, 8, 2);
    const ParamLayout dl = dec.layout();
    Rng ir = make_rng(9, "init");
    const Vec pe = perturbed(models::init_params(enc, ir).entries(), 0.1, 6);
    const Vec pd = perturbed(models::init_params(dec, ir).entries(), 0.1, 7);
    data::Batch rb = small_batch(0, 3, 8);
    Rng sr = make_rng(8, "soft");
    for (auto& y : rb.y) y = rand_uniform(y.rows(), y.cols(), sr, 0.05, 0.95);
    const data::Batch cur = small_batch(1, 3, 9);
    Vec params(pe.size() + pd.size());
    params << pe, pd;
    const Eigen::Index n1 = pe.size(), n2 = pd.size();
    cases.push_back({"generative replay composite", [enc, el, dec, dl, rb, cur, n1, n2](ad::Tape&, ad::Var p) {
                       Rng noise = make_rng(3, "vae-noise");  // same draws on every evaluation
                       const cl::RtfWeights w{0.8, 1.3, 0.6, cl::Likelihood::bernoulli, 1.0};
                       return cl::rtf_loss(enc, ParamViews(el, ad::view(p, 0, n1, 1)), dec,
                                           ParamViews(dl, ad::view(p, n1, n2, 1)), cur, {rb}, w, noise);
                     },
                     params});
  }
  return cases;
}

Outcome criterion_1() {
  Outcome o{true, ""};
  for (const auto& c : gradient_cases()) {
    const auto r = finite_diff_check(c.loss, c.params, kFdStep);
    const bool ok = r.max_rel_error < kFdTol;
    o.pass = o.pass && ok;
    o.detail += c.name + " " + fmt("%.2e", r.max_rel_error) + (ok ? "" : " (too large)") + "; ";
  }
  return o;
}

// ---------------------------------------------------------------------------------------
// 2. Linear theory

Outcome criterion_2() {
  Rng rng = make_rng(1, "theory");
  const auto bases = analysis::random_orthogonal_bases(32, {8, 8, 8, 8}, rng);
  std::vector<Mat> blocks;
  for (int k = 0; k < 4; ++k) blocks.push_back(orthogonal_init(8, 8, rng));
  const Mat w = analysis::build_subspace_rnn(bases, blocks);
  double worst = 0.0;
  for (const auto& u : bases) {
    Mat h = u;
    for (int step = 0; step < 50; ++step) {
      h = w * h;
      worst = std::max(worst, (h - u * (u.transpose() * h)).norm());
    }
  }
  const auto rep = analysis::interference_experiment({3, 3}, 4, rng);
  bool throws = false;
  try {
    const Mat e = Mat::Identity(4, 4);
    (void)analysis::build_subspace_rnn({e.leftCols(3), e.rightCols(3)}, {Mat::Identity(3, 3), Mat::Identity(3, 3)});
  } catch (const Error&) {
    throws = true;
  }
  Outcome o;
  o.pass = worst <= kTheoryTol && !rep.feasible && rep.max_overlap > 0.0 && rep.overlap_bound > 0.0 && throws;
  o.detail = "max leak over 50 steps " + fmt("%.2e", worst) + "; p=(3,3), n_h=4 overlap " + fmt("%.4f", rep.max_overlap) +
             " (bound " + fmt("%.4f", rep.overlap_bound) + ")";
  return o;
}

// ---------------------------------------------------------------------------------------
// 3. Queue copy

Outcome criterion_3() {
  Outcome o{true, ""};
  Rng rng = make_rng(1, "queue");
  double worst = 1.0;
  for (int p = 1; p <= 10; ++p) {
    const data::CopyConfig cc{p, p, 8};
    const data::TaskSpec spec;
    const auto net = analysis::build_queue_copy_rnn(p, 7);
    for (int n = 0; n < 100; ++n) {
      const data::Sample s = data::gen_sample(cc, spec, rng);
      const double acc = data::bit_accuracy(analysis::simulate_linear_rnn(net, s.x), s);
      worst = std::min(worst, acc);
    }
  }
  o.pass = worst == 1.0;
  o.detail = "lowest per-pattern accuracy over p=1..10: " + fmt("%.4f", worst);
  return o;
}

// ---------------------------------------------------------------------------------------
// 4. Disjoint masks

Outcome criterion_4() {
  const ExperimentConfig cfg = make_config({"experiment.method=masking", "experiment.tasks=2", "model.hidden=64",
                                            "model.orth_reg=0", "train.iters=300", "masking.fraction=0.5"});
  harness::Experiment ex(cfg);
  cl::MaskSet masks;
  masks.masked_fraction = 0.5;
  masks.masks = {cl::block_mask(64, 0, 32), cl::block_mask(64, 32, 64)};
  ex.mask_override = masks;
  std::vector<Mat> before;
  const data::Batch& test0 = ex.test_sets().front();
  auto logits = [&](const ParamVector& psi) {
    return models::predict(ex.arch(), psi, test0.x, 0, models::ForwardOptions{&masks.masks[0], {}, -1});
  };
  ex.on_params = [&](int k, const ParamVector& psi) {
    if (k == 0) before = logits(psi);
  };
  const auto rec = ex.run();
  const std::vector<Mat> after = logits(*ex.final_params());
  bool identical = rec.ok() && before.size() == after.size();
  long differing = 0;
  for (std::size_t t = 0; identical && t < after.size(); ++t)
    for (Eigen::Index k = 0; k < after[t].size(); ++k)
      if (std::memcmp(&after[t].data()[k], &before[t].data()[k], sizeof(double)) != 0) ++differing;
  Outcome o;
  o.pass = identical && differing == 0;
  o.detail = rec.ok() ? "task-1 accuracy " + fmt("%.4f", rec.at(0, 0)) + " -> " + fmt("%.4f", rec.at(0, 1)) + ", " +
                            std::to_string(differing) + " logits changed"
                      : "run diverged";
  return o;
}

// ---------------------------------------------------------------------------------------
// 5. Three-task permuted copy ordering

struct Summary {
  double during = 0.0;
  double final = 0.0;
  bool ok = true;
};

Summary mean_over_seeds(const std::vector<std::string>& sets) {
  Summary s;
  int n = 0;
  for (int seed : kSeeds) {
    auto all = sets;
    all.push_back("experiment.seed=" + std::to_string(seed));
    const auto rec = harness::run_experiment(make_config(all));
    if (!rec.ok()) {
      s.ok = false;
      continue;
    }
    const auto m = harness::during_final_metrics(rec);
    std::fprintf(stderr, "  %s seed %d: during %.4f final %.4f (%.0f s)\n", rec.method.c_str(), seed, m.during,
                 m.final, rec.wall_s);
    s.during += m.during;
    s.final += m.final;
    ++n;
  }
  if (n > 0) {
    s.during /= n;
    s.final /= n;
  }
  return s;
}

Outcome criterion_5() {
  const std::vector<std::string> base = {"experiment.variant=permuted", "experiment.tasks=3", "experiment.p=5",
                                         "experiment.i=5", "model.hidden=128", "train.iters=3000"};
  auto with = [&](std::vector<std::string> extra) {
    auto v = base;
    v.insert(v.end(), extra.begin(), extra.end());
    return mean_over_seeds(v);
  };
  const Summary ft = with({"experiment.method=finetune"});
  const Summary ewc = with({"experiment.method=ewc"});
  const Summary hn = with({"experiment.method=hnet", "train.lr=0.003"});
  const Summary cs = with({"experiment.method=coresets", "coresets.size=100"});
  auto pct = [](double v) { return fmt("%.2f", 100.0 * v); };
  Outcome o;
  const bool ft_forgets = ft.final <= ft.during - 0.10;
  auto strong = [](const Summary& s) { return s.ok && s.final >= 0.95 && s.during >= 0.97; };
  const bool beats = cs.final >= ft.final + 0.10 && hn.final >= ft.final + 0.10;
  o.pass = ft.ok && ft_forgets && strong(ewc) && strong(hn) && strong(cs) && beats;
  o.detail = "during/final: fine-tuning " + pct(ft.during) + "/" + pct(ft.final) + ", EWC " + pct(ewc.during) + "/" +
             pct(ewc.final) + ", HNET " + pct(hn.during) + "/" + pct(hn.final) + ", coresets " + pct(cs.during) + "/" +
             pct(cs.final);
  return o;
}

// ---------------------------------------------------------------------------------------
// 6 and 7. Fisher and PCA trends on single-task runs

struct TrendRun {
  std::string variant;
  int p = 0, i = 0, seed = 0;
  double mean_fisher = 0.0;
  int stop_dim = 0;
  double accuracy = 0.0;
  bool ok = true;
};

const char* kBuildStamp = __DATE__ " " __TIME__;

std::vector<TrendRun> trend_runs() {
  const std::string cache = "acceptance_trend_cache.json";
  if (std::filesystem::exists(cache)) {
    std::ifstream f(cache);
    const auto j = nlohmann::json::parse(f, nullptr, false);
    if (j.is_object() && j.value("build", "") == kBuildStamp) {
      std::vector<TrendRun> out;
      for (const auto& r : j["runs"])
        out.push_back({r["variant"], r["p"], r["i"], r["seed"], r["mean_fisher"], r["stop_dim"], r["accuracy"], r["ok"]});
      return out;
    }
  }
  struct Setting {
    std::string variant;
    int p, i;
  };
  const std::vector<Setting> settings = {{"basic", 5, 5},   {"basic", 10, 10},  {"basic", 15, 15},
                                         {"padded", 5, 5},  {"padded", 5, 15},  {"padded", 5, 25}};
  std::vector<TrendRun> out;
  for (const auto& s : settings)
    for (int seed : kSeeds) {
      const ExperimentConfig cfg =
          make_config({"experiment.method=finetune", "experiment.tasks=1", "experiment.variant=" + s.variant,
                       "experiment.p=" + std::to_string(s.p), "experiment.i=" + std::to_string(s.i),
                       "experiment.seed=" + std::to_string(seed), "model.hidden=128", "train.iters=3000"});
      const auto a = harness::single_task_analysis(cfg);
      TrendRun r{s.variant, s.p, s.i, seed, a.mean_fisher_whh, a.stop_dim, 0.0, a.record.ok()};
      if (r.ok) r.accuracy = a.record.at(0, 0);
      std::fprintf(stderr, "  %s p=%d i=%d seed %d: accuracy %.4f, mean W_hh Fisher %.4e, stop-step dim %d\n",
                   s.variant.c_str(), s.p, s.i, seed, r.accuracy, r.mean_fisher, r.stop_dim);
      out.push_back(r);
    }
  nlohmann::json j;
  j["build"] = kBuildStamp;
  j["runs"] = nlohmann::json::array();
  for (const auto& r : out)
    j["runs"].push_back({{"variant", r.variant}, {"p", r.p}, {"i", r.i}, {"seed", r.seed},
                         {"mean_fisher", r.mean_fisher}, {"stop_dim", r.stop_dim}, {"accuracy", r.accuracy},
                         {"ok", r.ok}});
  std::ofstream(cache) << j.dump(2) << "\n";
  return out;
}

struct TrendMeans {
  std::map<std::pair<std::string, int>, double> fisher;  // (variant, p or i)
  std::map<std::pair<std::string, int>, double> dim;
  bool ok = true;
};

TrendMeans trend_means() {
  TrendMeans m;
  std::map<std::pair<std::string, int>, int> count;
  for (const auto& r : trend_runs()) {
    m.ok = m.ok && r.ok;
    const auto key = std::make_pair(r.variant, r.variant == "basic" ? r.p : r.i);
    m.fisher[key] += r.mean_fisher;
    m.dim[key] += r.stop_dim;
    count[key] += 1;
  }
  for (auto& [k, v] : m.fisher) v /= count[k];
  for (auto& [k, v] : m.dim) v /= count[k];
  return m;
}

Outcome criterion_6() {
  const TrendMeans m = trend_means();
  const double f5 = m.fisher.at({"basic", 5}), f15 = m.fisher.at({"basic", 15});
  const double g5 = m.fisher.at({"padded", 5}), g25 = m.fisher.at({"padded", 25});
  const double grow = f15 / f5, pad = g25 / g5;
  Outcome o;
  o.pass = m.ok && grow >= 2.0 && pad <= 1.5 && pad >= 1.0 / 1.5;
  o.detail = "basic p=5/10/15: " + fmt("%.3e", f5) + "/" + fmt("%.3e", m.fisher.at({"basic", 10})) + "/" +
             fmt("%.3e", f15) + " (x" + fmt("%.2f", grow) + "); padded i=5/15/25: " + fmt("%.3e", g5) + "/" +
             fmt("%.3e", m.fisher.at({"padded", 15})) + "/" + fmt("%.3e", g25) + " (x" + fmt("%.2f", pad) + ")";
  return o;
}

Outcome criterion_7() {
  const TrendMeans m = trend_means();
  const double d5 = m.dim.at({"basic", 5}), d10 = m.dim.at({"basic", 10}), d15 = m.dim.at({"basic", 15});
  double lo = 1e9, hi = -1e9;
  for (int i : {5, 15, 25}) {
    lo = std::min(lo, m.dim.at({"padded", i}));
    hi = std::max(hi, m.dim.at({"padded", i}));
  }
  Outcome o;
  o.pass = m.ok && d5 <= d10 && d10 <= d15 && hi - lo <= 2.0;
  o.detail = "stop-step dimension, basic p=5/10/15: " + fmt("%.2f", d5) + "/" + fmt("%.2f", d10) + "/" +
             fmt("%.2f", d15) + "; padded i=5/15/25: " + fmt("%.2f", m.dim.at({"padded", 5})) + "/" +
             fmt("%.2f", m.dim.at({"padded", 15})) + "/" + fmt("%.2f", m.dim.at({"padded", 25}));
  return o;
}

// ---------------------------------------------------------------------------------------
// 8. Closed-form oracles

Outcome criterion_8() {
  std::vector<std::pair<std::string, double>> errs;
  ad::Tape t;
  const Mat one = Mat::Ones(1, 1);
  errs.emplace_back("BCE(0)", ad::bce_with_logits(t.constant(Mat::Zero(1, 1)), one, one).scalar() - std::numbers::ln2);
  errs.emplace_back("xent(C=4)", ad::softmax_xent(t.constant(Mat::Zero(1, 4)), {2}, {1.0}).scalar() - std::log(4.0));
  errs.emplace_back("KL", ad::gaussian_kl(t.constant(one), t.constant(Mat::Zero(1, 1))).scalar() - 0.5);

  cl::EwcState ewc(1, 1.0);
  cl::ewc_accumulate(ewc, Vec::Constant(1, 2.0), Vec::Zero(1));
  errs.emplace_back("EWC", cl::ewc_penalty(t.constant(Mat::Constant(1, 1, 0.5)), ewc).scalar() - 0.5);

  cl::SiState si(Vec::Zero(1), 2.0);
  si.big_omega[0] = 4.0;
  si.tasks_seen = 1;
  errs.emplace_back("SI penalty", cl::si_penalty(t.constant(Mat::Constant(1, 1, 0.5)), si).scalar() - 2.0);
  cl::SiState si2(Vec::Zero(1), 1.0, 1e-3);
  si2.omega[0] = 1.0;
  cl::si_consolidate(si2, Vec::Zero(1));
  errs.emplace_back("SI consolidation", si2.big_omega[0] - 1000.0);

  const double delta = 0.3;
  const Vec target = Vec::LinSpaced(5, -1.0, 1.0);
  Mat shifted = as_column(target);
  shifted(2, 0) += delta;
  errs.emplace_back("HNET", hnet::hnet_output_penalty({t.constant(shifted)}, {target}, 2.0).scalar() - 2.0 * delta * delta);

  Outcome o{true, ""};
  for (const auto& [name, e] : errs) {
    o.pass = o.pass && std::abs(e) <= kOracleTol;
    o.detail += name + " " + fmt("%.1e", std::abs(e)) + "; ";
  }
  return o;
}

// ---------------------------------------------------------------------------------------
// 9. Determinism of the CLI

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Outcome criterion_9() {
  const std::vector<std::string> methods = {"finetune", "ewc",      "si",  "masking",   "coresets",
                                            "hnet",     "multitask", "rtf", "from_scratch"};
  const auto dir = std::filesystem::temp_directory_path() / ("seqcl_determinism_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  Outcome o{true, ""};
  int identical = 0;
  for (const auto& m : methods) {
    std::string first;
    bool same = true;
    for (int rep = 0; rep < 2; ++rep) {
      const std::string out = (dir / (m + std::to_string(rep) + ".json")).string();
      const std::string cmd = std::string(SEQCL_CLI_PATH) + " run --set experiment.method=" + m +
                              " --set experiment.tasks=2 --set train.iters=60 --set experiment.test_samples=200"
                              " --set experiment.seed=5 > " + out + " 2>/dev/null";
      const int rc = std::system(cmd.c_str());
      const std::string text = slurp(out);
      if (rc != 0 || text.empty()) same = false;
      if (rep == 0) first = text;
      else same = same && text == first;
    }
    o.pass = o.pass && same;
    identical += same ? 1 : 0;
    if (!same) o.detail += m + " differs; ";
  }
  std::filesystem::remove_all(dir);
  o.detail += std::to_string(identical) + "/" + std::to_string(methods.size()) + " methods byte-identical";
  return o;
}

// ---------------------------------------------------------------------------------------
// 10. Pattern manipulation difficulty

Outcome criterion_10() {
  auto run = [](int r) {
    return mean_over_seeds({"experiment.method=ewc", "experiment.variant=patman", "experiment.tasks=2",
                            "experiment.p=5", "experiment.i=5", "experiment.r=" + std::to_string(r)});
  };
  const Summary r1 = run(1), r5 = run(5);
  Outcome o;
  o.pass = r1.ok && r5.ok && r5.final <= r1.final - 0.03;
  o.detail = "EWC final r=1 " + fmt("%.2f", 100 * r1.final) + ", r=5 " + fmt("%.2f", 100 * r5.final) + " (during " +
             fmt("%.2f", 100 * r1.during) + " / " + fmt("%.2f", 100 * r5.during) + ")";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient oracle", criterion_1},
      {"linear subspace theory", criterion_2},
      {"queue copy construction", criterion_3},
      {"disjoint masks keep task 1 exactly", criterion_4},
      {"three-task permuted copy ordering", criterion_5},
      {"recurrent Fisher grows with pattern length", criterion_6},
      {"stop-step dimension trend", criterion_7},
      {"closed-form loss and penalty values", criterion_8},
      {"byte-identical repeated runs", criterion_9},
      {"pattern manipulation is harder at r=5", criterion_10},
  };
  std::vector<int> which;
  for (int a = 1; a < argc; ++a) which.push_back(std::atoi(argv[a]));
  if (which.empty())
    for (int n = 1; n <= static_cast<int>(criteria.size()); ++n) which.push_back(n);

  int failures = 0;
  for (int n : which) {
    if (n < 1 || n > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "unknown criterion %d\n", n);
      return 2;
    }
    const auto& [name, fn] = criteria[static_cast<std::size_t>(n - 1)];
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] criterion %d: %s -- %s\n", o.pass ? "PASS" : "FAIL", n, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
