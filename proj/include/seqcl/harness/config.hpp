// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration: flat UTF-8 text with [section] headers and key = value lines.
// '#' and ';' start comments. Keys are addressed as section.key on the command line.
// A [grid] section lists section.key = v1, v2, ... for grid searches (or v1 | v2 | ...
// when the values contain commas).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "seqcl/cl/si.hpp"
#include "seqcl/cl/vae.hpp"
#include "seqcl/core/rng.hpp"
#include "seqcl/data/copy_task.hpp"
#include "seqcl/hnet/hypernet.hpp"
#include "seqcl/models/rnn.hpp"

namespace seqcl::harness {

enum class Method { finetune, from_scratch, multitask, ewc, si, masking, masking_si, coresets, hnet, rtf };

inline const std::vector<std::pair<Method, std::string>>& method_names() {
  static const std::vector<std::pair<Method, std::string>> names = {
      {Method::finetune, "finetune"},   {Method::from_scratch, "from_scratch"}, {Method::multitask, "multitask"},
      {Method::ewc, "ewc"},             {Method::si, "si"},                     {Method::masking, "masking"},
      {Method::masking_si, "masking_si"}, {Method::coresets, "coresets"},       {Method::hnet, "hnet"},
      {Method::rtf, "rtf"}};
  return names;
}

inline std::string to_string(Method m) {
  for (const auto& [k, v] : method_names())
    if (k == m) return v;
  return "?";
}

inline Method parse_method(const std::string& s) {
  for (const auto& [k, v] : method_names())
    if (v == s) return k;
  std::string all;
  for (const auto& [k, v] : method_names()) all += (all.empty() ? "" : ", ") + v;
  throw ConfigError("unknown method '" + s + "' (expected one of: " + all + ")");
}

/// Sections whose keys only make sense for some methods.
inline bool section_applies(const std::string& section, Method m) {
  if (section == "ewc") return m == Method::ewc;
  if (section == "si") return m == Method::si || m == Method::masking_si;
  if (section == "masking") return m == Method::masking || m == Method::masking_si;
  if (section == "coresets") return m == Method::coresets;
  if (section == "hnet") return m == Method::hnet;
  if (section == "rtf") return m == Method::rtf;
  return true;
}

/// Every accepted key with its default value.
inline const std::map<std::string, std::string>& default_values() {
  static const std::map<std::string, std::string> d = {
      {"experiment.method", "finetune"},
      {"experiment.variant", "permuted"},
      {"experiment.tasks", "3"},
      {"experiment.p", "5"},
      {"experiment.i", "5"},
      {"experiment.r", "1"},
      {"experiment.f_in", "8"},
      {"experiment.seed", "1"},
      {"experiment.test_samples", "1000"},
      {"model.kind", "vanilla"},
      {"model.hidden", "128"},
      {"model.task_id_input", "false"},
      {"model.orth_init", "true"},
      {"model.orth_reg", "1"},
      {"train.lr", "0.001"},
      {"train.batch", "64"},
      {"train.iters", "3000"},
      {"train.clip", "100"},
      {"ewc.lambda", "1000"},
      {"ewc.fisher_samples", "1000"},
      {"si.lambda", "1"},
      {"si.eps", "0.001"},
      {"si.denominator", "abs"},
      {"masking.fraction", "0.8"},
      {"coresets.size", "100"},
      {"coresets.lambda_distill", "1"},
      {"hnet.beta", "10"},
      {"hnet.hidden", "25,25"},
      {"hnet.chunk", "1000"},
      {"hnet.emb_dim", "16"},
      {"hnet.chunk_emb_dim", "16"},
      {"hnet.emb_init_sd", "1"},
      {"hnet.chunk_emb_init_sd", "1"},
      {"hnet.activation", "sigmoid"},
      {"hnet.out_init_scale", "0.25"},
      {"hnet.subset", "0"},
      {"rtf.latent", "8"},
      {"rtf.decoder_hidden", "64"},
      {"rtf.lambda_distill", "1"},
      {"rtf.lambda_rec", "1"},
      {"rtf.lambda_pm", "1"},
      {"rtf.likelihood", "bernoulli"},
      {"rtf.tau", "1"},
      {"rtf.replay_mode", "threshold"},
      {"theory.dims", "8,8,8,8"},
      {"theory.hidden", "32"},
      {"theory.queue_p_max", "10"},
  };
  return d;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

/// Key/value pairs as written, before typing and validation.
struct RawConfig {
  std::map<std::string, std::string> values;               // explicitly set keys only
  std::map<std::string, std::vector<std::string>> grid;    // key -> candidate values

  [[nodiscard]] std::string get(const std::string& key) const {
    const auto it = values.find(key);
    if (it != values.end()) return it->second;
    return default_values().at(key);
  }
};

inline void check_known_key(const std::string& key) {
  if (!default_values().count(key)) throw ConfigError("unknown configuration key '" + key + "'");
}

/// Applies one "section.key=value" assignment.
inline void apply_assignment(RawConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  const std::string key = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  check_known_key(key);
  if (value.empty()) throw ConfigError("empty value for '" + key + "'");
  cfg.values[key] = value;
}

inline RawConfig parse_config_text(const std::string& text) {
  RawConfig cfg;
  std::string section;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      static const std::set<std::string> known = {"experiment", "model", "train", "ewc", "si", "masking",
                                                  "coresets", "hnet", "rtf", "theory", "grid"};
      if (!known.count(section)) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    if (section.empty()) throw ConfigError(where + "key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section == "grid") {
      check_known_key(key);
      // Values are comma separated; use '|' instead when the values are lists themselves.
      const auto vals = split_list(value, value.find('|') != std::string::npos ? '|' : ',');
      if (vals.empty()) throw ConfigError(where + "grid entry '" + key + "' has no values");
      cfg.grid[key] = vals;
      continue;
    }
    try {
      apply_assignment(cfg, section + "." + key + "=" + value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return cfg;
}

inline RawConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

namespace detail {

inline long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
  }
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size() || !std::isfinite(x)) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const auto& s : split_list(v)) out.push_back(static_cast<int>(parse_int(key, s)));
  return out;
}

}  // namespace detail

struct TheoryConfig {
  std::vector<int> dims{8, 8, 8, 8};
  int hidden = 32;
  int queue_p_max = 10;
};

/// Typed, validated configuration.
struct ExperimentConfig {
  Method method = Method::finetune;
  data::Variant variant = data::Variant::permuted;
  int tasks = 3;
  data::CopyConfig copy;
  int r = 1;
  std::uint64_t seed = 1;
  int test_samples = 1000;

  models::CellKind kind = models::CellKind::vanilla;
  int hidden = 128;
  bool task_id_input = false;
  bool orth_init = true;
  double orth_reg = 1.0;

  double lr = 1e-3;
  int batch = 64;
  int iters = 3000;
  double clip = 100.0;

  double ewc_lambda = 100.0;
  int fisher_samples = 1000;

  double si_lambda = 1.0;
  double si_eps = 1e-3;
  cl::SiDenominator si_denominator = cl::SiDenominator::abs;

  double mask_fraction = 0.8;

  int coreset_size = 100;
  double coreset_lambda = 1.0;

  hnet::HnetArch hnet;
  double hnet_beta = 1.0;
  int hnet_subset = 0;

  int rtf_latent = 8;
  int rtf_decoder_hidden = 64;
  double rtf_lambda_distill = 1.0;
  double rtf_lambda_rec = 1.0;
  double rtf_lambda_pm = 1.0;
  cl::Likelihood rtf_likelihood = cl::Likelihood::bernoulli;
  double rtf_tau = 1.0;
  cl::ReplayMode rtf_replay_mode = cl::ReplayMode::threshold;

  TheoryConfig theory;

  RawConfig raw;

  /// Sorted key=value lines of every key that applies to the method, defaults included.
  [[nodiscard]] std::map<std::string, std::string> canonical() const {
    std::map<std::string, std::string> out;
    for (const auto& [key, def] : default_values()) {
      const std::string section = key.substr(0, key.find('.'));
      if (section == "theory" || !section_applies(section, method)) continue;
      out[key] = raw.get(key);
    }
    return out;
  }

  [[nodiscard]] std::string hash() const {
    std::string text;
    for (const auto& [k, v] : canonical()) text += k + "=" + v + "\n";
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(seqcl::detail::fnv1a(text)));
    return buf;
  }

  [[nodiscard]] models::RnnArch main_arch() const {
    models::RnnArch a;
    a.kind = kind;
    a.n_in = copy.f_in;
    a.n_hidden = hidden;
    a.n_out = copy.f_out();
    a.num_heads = tasks;
    a.task_id_dims = task_id_input ? tasks : 0;
    a.vae_latent = method == Method::rtf ? rtf_latent : 0;
    return a;
  }
};

inline ExperimentConfig materialize(const RawConfig& raw) {
  using namespace detail;
  ExperimentConfig c;
  c.raw = raw;
  auto s = [&](const std::string& k) { return raw.get(k); };
  auto i = [&](const std::string& k) { return parse_int(k, s(k)); };
  auto d = [&](const std::string& k) { return parse_double(k, s(k)); };

  c.method = parse_method(s("experiment.method"));
  for (const auto& [key, value] : raw.values) {
    const std::string section = key.substr(0, key.find('.'));
    if (!section_applies(section, c.method))
      throw ConfigError("'" + key + "' does not apply to method '" + to_string(c.method) + "'");
  }
  c.variant = data::parse_variant(s("experiment.variant"));
  c.tasks = static_cast<int>(i("experiment.tasks"));
  c.copy.p = static_cast<int>(i("experiment.p"));
  c.copy.i = static_cast<int>(i("experiment.i"));
  c.copy.f_in = static_cast<int>(i("experiment.f_in"));
  c.r = static_cast<int>(i("experiment.r"));
  const long seed = i("experiment.seed");
  if (seed < 0) throw ConfigError("experiment.seed must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);
  c.test_samples = static_cast<int>(i("experiment.test_samples"));

  c.kind = models::parse_cell(s("model.kind"));
  c.hidden = static_cast<int>(i("model.hidden"));
  c.task_id_input = parse_bool("model.task_id_input", s("model.task_id_input"));
  c.orth_init = parse_bool("model.orth_init", s("model.orth_init"));
  c.orth_reg = d("model.orth_reg");

  c.lr = d("train.lr");
  c.batch = static_cast<int>(i("train.batch"));
  c.iters = static_cast<int>(i("train.iters"));
  c.clip = d("train.clip");

  c.ewc_lambda = d("ewc.lambda");
  c.fisher_samples = static_cast<int>(i("ewc.fisher_samples"));
  c.si_lambda = d("si.lambda");
  c.si_eps = d("si.eps");
  c.si_denominator = cl::parse_si_denominator(s("si.denominator"));
  c.mask_fraction = d("masking.fraction");
  c.coreset_size = static_cast<int>(i("coresets.size"));
  c.coreset_lambda = d("coresets.lambda_distill");

  c.hnet_beta = d("hnet.beta");
  c.hnet.hidden = parse_int_list("hnet.hidden", s("hnet.hidden"));
  c.hnet.chunk_out = static_cast<int>(i("hnet.chunk"));
  c.hnet.task_emb_dim = static_cast<int>(i("hnet.emb_dim"));
  c.hnet.chunk_emb_dim = static_cast<int>(i("hnet.chunk_emb_dim"));
  c.hnet.task_emb_init_sd = d("hnet.emb_init_sd");
  c.hnet.chunk_emb_init_sd = d("hnet.chunk_emb_init_sd");
  c.hnet.activation = hnet::parse_activation(s("hnet.activation"));
  c.hnet.out_init_scale = d("hnet.out_init_scale");
  c.hnet_subset = static_cast<int>(i("hnet.subset"));

  c.rtf_latent = static_cast<int>(i("rtf.latent"));
  c.rtf_decoder_hidden = static_cast<int>(i("rtf.decoder_hidden"));
  c.rtf_lambda_distill = d("rtf.lambda_distill");
  c.rtf_lambda_rec = d("rtf.lambda_rec");
  c.rtf_lambda_pm = d("rtf.lambda_pm");
  c.rtf_likelihood = cl::parse_likelihood(s("rtf.likelihood"));
  c.rtf_tau = d("rtf.tau");
  c.rtf_replay_mode = cl::parse_replay_mode(s("rtf.replay_mode"));

  c.theory.dims = parse_int_list("theory.dims", s("theory.dims"));
  c.theory.hidden = static_cast<int>(i("theory.hidden"));
  c.theory.queue_p_max = static_cast<int>(i("theory.queue_p_max"));

  // Validation.
  c.copy.validate();
  if (c.tasks < 1) throw ConfigError("experiment.tasks must be >= 1");
  if (c.variant == data::Variant::basic && c.copy.i != c.copy.p)
    throw ConfigError("the basic variant needs i == p; use the padded variant for i > p");
  if (c.variant == data::Variant::patman && c.r < 1) throw ConfigError("experiment.r must be >= 1 for patman");
  if (c.test_samples < 1) throw ConfigError("experiment.test_samples must be >= 1");
  if (c.hidden < 1) throw ConfigError("model.hidden must be >= 1");
  if (c.orth_reg < 0) throw ConfigError("model.orth_reg must be >= 0");
  if (c.lr <= 0) throw ConfigError("train.lr must be > 0");
  if (c.batch < 1) throw ConfigError("train.batch must be >= 1");
  if (c.iters < 0) throw ConfigError("train.iters must be >= 0");
  if (c.clip <= 0) throw ConfigError("train.clip must be > 0");
  if (c.ewc_lambda < 0) throw ConfigError("ewc.lambda must be >= 0");
  if (c.fisher_samples < 1) throw ConfigError("ewc.fisher_samples must be >= 1");
  if (c.si_lambda < 0) throw ConfigError("si.lambda must be >= 0");
  if (c.si_eps <= 0) throw ConfigError("si.eps must be > 0");
  if (c.mask_fraction < 0 || c.mask_fraction > 1) throw ConfigError("masking.fraction must lie in [0, 1]");
  if (c.coreset_size < 1) throw ConfigError("coresets.size must be >= 1");
  if (c.coreset_lambda < 0) throw ConfigError("coresets.lambda_distill must be >= 0");
  if (c.hnet_beta < 0) throw ConfigError("hnet.beta must be >= 0");
  if (c.hnet_subset < 0 || (c.tasks > 1 && c.hnet_subset > c.tasks - 1))
    throw ConfigError("hnet.subset must lie in [0, tasks - 1] (0 = all previous tasks)");
  c.hnet.validate();
  if (c.rtf_latent < 1) throw ConfigError("rtf.latent must be >= 1");
  if (c.rtf_decoder_hidden < 1) throw ConfigError("rtf.decoder_hidden must be >= 1");
  if (c.rtf_lambda_distill < 0 || c.rtf_lambda_rec < 0 || c.rtf_lambda_pm < 0)
    throw ConfigError("rtf weights must be >= 0");
  if (c.rtf_tau <= 0) throw ConfigError("rtf.tau must be > 0");
  if (c.method == Method::hnet && c.task_id_input)
    throw ConfigError("model.task_id_input is not supported with the hypernetwork method");
  if (c.theory.hidden < 1 || c.theory.queue_p_max < 1) throw ConfigError("theory sizes must be >= 1");
  return c;
}

/// Expands the [grid] section into concrete configurations (Cartesian product, in key order).
inline std::vector<RawConfig> expand_grid(const RawConfig& base) {
  std::vector<RawConfig> out{base};
  out.front().grid.clear();
  for (const auto& [key, vals] : base.grid) {
    std::vector<RawConfig> next;
    for (const auto& cfg : out)
      for (const auto& v : vals) {
        RawConfig c = cfg;
        c.values[key] = v;
        next.push_back(std::move(c));
      }
    out = std::move(next);
  }
  return out;
}

}  // namespace seqcl::harness
