// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0
//
// seqcl command-line driver.
//
//   seqcl run --config FILE [--set key=value ...] [--out DIR] [--save-params FILE]
//   seqcl grid --config FILE --cap N --seeds a,b,c [--workers W] [--out DIR]
//   seqcl analyze {pca|fisher|subspace|theory} --config FILE [--set key=value ...] [--svg FILE]
//   seqcl report --in DIR --format csv|json|svg [--out FILE]
//
// Exit codes: 0 success, 1 runtime error, 2 configuration error, 3 diverged run.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "seqcl/analysis/queue_rnn.hpp"
#include "seqcl/analysis/subspace.hpp"
#include "seqcl/harness/grid.hpp"
#include "seqcl/harness/report.hpp"
#include "seqcl/io/checkpoint.hpp"

namespace {

using namespace seqcl;
using namespace seqcl::harness;

constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

RawConfig load(const std::string& path, const std::vector<std::string>& sets) {
  RawConfig raw = path.empty() ? RawConfig{} : load_config_file(path);
  for (const auto& s : sets) apply_assignment(raw, s);
  return raw;
}

std::string run_name(const RunRecord& r) {
  return r.method + "-" + r.config_hash + "-s" + std::to_string(r.seed);
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-")
    std::cout << text;
  else
    write_text_file(path, text);
}

int cmd_run(const std::string& config, const std::vector<std::string>& sets, const std::string& out,
            const std::string& save_params) {
  const ExperimentConfig cfg = materialize(load(config, sets));
  if (!cfg.raw.grid.empty()) std::cerr << "seqcl: note: [grid] section ignored by 'run'\n";
  Experiment ex(cfg);
  ex.on_task_end = [](int task, const RunRecord& rec) {
    std::cerr << "task " << task + 1 << "/" << rec.tasks << " done:";
    for (int k = 0; k <= task; ++k)
      if (rec.accuracy[static_cast<std::size_t>(k)][static_cast<std::size_t>(task)])
        std::fprintf(stderr, " %.4f", rec.at(k, task));
    std::cerr << "\n";
  };
  const RunRecord rec = ex.run();
  if (out.empty())
    std::cout << record_to_string(rec);
  else
    save_record(out, run_name(rec), rec);
  if (!save_params.empty()) {
    if (ex.final_params())
      io::save_checkpoint(save_params, io::param_sections(*ex.final_params()));
    else if (ex.final_hnet())
      io::save_checkpoint(save_params, io::hnet_sections(*ex.final_hnet()));
    else
      std::cerr << "seqcl: note: method '" << rec.method << "' keeps no single parameter set; nothing saved\n";
  }
  if (!rec.ok()) {
    std::cerr << "seqcl: run diverged at task " << rec.failed_task + 1 << ", iteration " << rec.failed_iter << ": "
              << rec.failure << "\n";
    return kExitDiverged;
  }
  const DuringFinal m = during_final_metrics(rec);
  std::fprintf(stderr, "during %.4f final %.4f (%.1f s)\n", m.during, m.final, rec.wall_s);
  return 0;
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (const auto& v : split_list(s)) out.push_back(static_cast<std::uint64_t>(harness::detail::parse_int("--seeds", v)));
  if (out.empty()) throw ConfigError("--seeds needs at least one seed");
  return out;
}

int cmd_grid(const std::string& config, const std::vector<std::string>& sets, int cap, const std::string& seeds,
             int workers, const std::string& out) {
  const RawConfig raw = load(config, sets);
  const GridResult res = grid_search(raw, cap, parse_seeds(seeds), workers);
  std::printf("rank,final,status,config\n");
  for (std::size_t n = 0; n < res.ranking.size(); ++n) {
    const GridEntry& e = res.entries[static_cast<std::size_t>(res.ranking[n])];
    std::string desc;
    for (const auto& [k, vals] : raw.grid) desc += (desc.empty() ? "" : ";") + k + "=" + e.config.get(k);
    std::printf("%zu,%s,%s,%s\n", n + 1, std::isnan(e.final) ? "" : harness::detail::fmt(e.final).c_str(),
                e.record.status.c_str(), desc.c_str());
  }
  if (!res.best_runs.empty())
    std::fprintf(stderr, "best configuration over %zu seeds: final %.4f +- %.4f\n", res.best_runs.size(),
                 res.best_mean_final, res.best_std_final);
  if (!out.empty()) {
    for (const auto& e : res.entries) save_record(out + "/search", run_name(e.record), e.record);
    for (const auto& r : res.best_runs) save_record(out + "/best", run_name(r), r);
  }
  bool diverged = false;
  for (const auto& r : res.best_runs) diverged = diverged || !r.ok();
  return diverged ? kExitDiverged : 0;
}

int cmd_analyze(const std::string& what, const std::string& config, const std::vector<std::string>& sets,
                const std::string& svg) {
  const RawConfig raw = load(config, sets);
  if (what == "theory") {
    const ExperimentConfig cfg = materialize(raw);
    Rng rng = make_rng(cfg.seed, "theory");
    const auto rep = analysis::interference_experiment(cfg.theory.dims, cfg.theory.hidden, rng);
    std::printf("section,key,value\n");
    std::printf("subspace,capacity,%d\nsubspace,total_dim,%d\nsubspace,feasible,%d\n", rep.capacity, rep.total_dim,
                rep.feasible ? 1 : 0);
    for (std::size_t k = 0; k < rep.retention_errors.size(); ++k)
      std::printf("subspace,retention_error_%zu,%.3e\n", k + 1, rep.retention_errors[k]);
    std::printf("subspace,max_overlap,%.6f\nsubspace,overlap_bound,%.6f\n", rep.max_overlap, rep.overlap_bound);
    Rng prng = make_rng(cfg.seed, "queue");
    for (int p = 1; p <= cfg.theory.queue_p_max; ++p) {
      data::CopyConfig cc{p, p, cfg.copy.f_in};
      data::TaskSpec spec;
      const auto net = analysis::build_queue_copy_rnn(p, cc.f_out());
      data::BitCount c;
      for (int n = 0; n < 100; ++n) {
        const data::Sample s = data::gen_sample(cc, spec, prng);
        const auto b = data::count_bits(analysis::simulate_linear_rnn(net, s.x), s.y, s.loss_weight);
        c.correct += b.correct;
        c.total += b.total;
      }
      std::printf("queue,accuracy_p%d,%.6f\n", p, static_cast<double>(c.correct) / static_cast<double>(c.total));
    }
    return 0;
  }
  if (what == "pca" || what == "fisher") {
    std::vector<SingleTaskAnalysis> runs;
    std::vector<ExperimentConfig> cfgs;
    for (const auto& g : expand_grid(raw)) cfgs.push_back(materialize(g));
    for (const auto& c : cfgs) runs.push_back(single_task_analysis(c));
    if (what == "pca") {
      std::printf("p,i,seed,timestep,intrinsic_dim\n");
      for (std::size_t n = 0; n < runs.size(); ++n)
        for (std::size_t t = 0; t < runs[n].intrinsic_dims.size(); ++t)
          std::printf("%d,%d,%llu,%zu,%d\n", cfgs[n].copy.p, cfgs[n].copy.i,
                      static_cast<unsigned long long>(cfgs[n].seed), t, runs[n].intrinsic_dims[t]);
    } else {
      std::printf("p,i,seed,mean_fisher,max_fisher,accuracy\n");
      for (std::size_t n = 0; n < runs.size(); ++n)
        std::printf("%d,%d,%llu,%.6e,%.6e,%.6f\n", cfgs[n].copy.p, cfgs[n].copy.i,
                    static_cast<unsigned long long>(cfgs[n].seed), runs[n].mean_fisher_whh, runs[n].fisher.max,
                    runs[n].record.ok() ? runs[n].record.at(0, 0) : std::nan(""));
    }
    if (!svg.empty()) {
      Series s;
      s.label = what == "pca" ? "stop-step dimension" : "mean W_hh Fisher";
      for (std::size_t n = 0; n < runs.size(); ++n) {
        s.x.push_back(cfgs[n].variant == data::Variant::padded ? cfgs[n].copy.i : cfgs[n].copy.p);
        s.y.push_back(what == "pca" ? runs[n].stop_dim : runs[n].mean_fisher_whh);
      }
      write_text_file(svg, svg_line_chart(what == "pca" ? "Intrinsic dimension at the stop step" : "Recurrent Fisher",
                                          "p (basic) / i (padded)", s.label, {s}));
    }
    bool diverged = false;
    for (const auto& r : runs) diverged = diverged || !r.record.ok();
    return diverged ? kExitDiverged : 0;
  }
  if (what == "subspace") {
    const ExperimentConfig cfg = materialize(raw);
    if (cfg.method == Method::hnet || cfg.method == Method::from_scratch)
      throw ConfigError("analyze subspace needs a method with one shared network and per-task heads");
    Experiment ex(cfg);
    const RunRecord rec = ex.run();
    if (!rec.ok()) return kExitDiverged;
    const ParamVector& psi = *ex.final_params();
    std::printf("k,l,similarity\n");
    for (int k = 0; k < cfg.tasks; ++k)
      for (int l = 0; l < cfg.tasks; ++l)
        std::printf("%d,%d,%.6f\n", k + 1, l + 1,
                    analysis::head_subspace_similarity(psi.view(models::RnnArch::head_w(k)),
                                                       psi.view(models::RnnArch::head_w(l))));
    return 0;
  }
  throw ConfigError("unknown analysis '" + what + "' (expected pca, fisher, subspace or theory)");
}

int cmd_report(const std::string& in, const std::string& format, const std::string& out) {
  const auto records = load_records(in);
  if (format == "csv")
    emit(out, report_csv(records));
  else if (format == "json")
    emit(out, report_json(records));
  else if (format == "svg")
    emit(out, report_svg(records));
  else
    throw ConfigError("unknown report format '" + format + "' (expected csv, json or svg)");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continual learning of recurrent networks on Copy Task variants"};
  app.require_subcommand(1);

  std::string config, out, save_params, seeds, in, format, what, svg;
  std::vector<std::string> sets;
  int cap = 0, workers = 1;

  auto* run = app.add_subcommand("run", "train one configuration and print its run record");
  run->add_option("--config", config, "configuration file")->check(CLI::ExistingFile);
  run->add_option("--set", sets, "override, e.g. --set ewc.lambda=100")->take_all();
  run->add_option("--out", out, "write <name>.json and a timing sidecar into this directory");
  run->add_option("--save-params", save_params, "write the final parameters as a checkpoint file");

  auto* grid = app.add_subcommand("grid", "hyperparameter search over the [grid] section");
  grid->add_option("--config", config, "configuration file")->required()->check(CLI::ExistingFile);
  grid->add_option("--set", sets, "override")->take_all();
  grid->add_option("--cap", cap, "maximum number of configurations (0 = all)");
  grid->add_option("--seeds", seeds, "comma-separated seeds; the first drives the search")->required();
  grid->add_option("--workers", workers, "parallel runs")->check(CLI::PositiveNumber);
  grid->add_option("--out", out, "directory for all run records");

  auto* analyze = app.add_subcommand("analyze", "diagnostics: pca, fisher, subspace, theory");
  analyze->add_option("what", what, "pca | fisher | subspace | theory")->required();
  analyze->add_option("--config", config, "configuration file")->check(CLI::ExistingFile);
  analyze->add_option("--set", sets, "override")->take_all();
  analyze->add_option("--svg", svg, "also render a chart (pca, fisher)");

  auto* report = app.add_subcommand("report", "summarize the run records of a directory");
  report->add_option("--in", in, "directory of run records")->required();
  report->add_option("--format", format, "csv | json | svg")->required();
  report->add_option("--out", out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config, sets, out, save_params);
    if (*grid) return cmd_grid(config, sets, cap, seeds, workers, out);
    if (*analyze) return cmd_analyze(what, config, sets, svg);
    if (*report) return cmd_report(in, format, out);
  } catch (const ConfigError& e) {
    std::cerr << "seqcl: configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "seqcl: error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
