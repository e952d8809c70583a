// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "seqcl/core/types.hpp"

namespace seqcl::harness {

/// Outcome of one run. accuracy[k][j] is the test accuracy of task k after training task j,
/// defined for j >= k only.
struct RunRecord {
  std::string method;
  std::string variant;
  int tasks = 0;
  int p = 0;
  int i = 0;
  int r = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::map<std::string, std::string> config;
  std::vector<std::vector<std::optional<double>>> accuracy;
  std::string status = "ok";  // "ok" or "diverged"
  std::string failure;
  int failed_task = -1;
  long failed_iter = -1;
  double wall_s = 0.0;  // kept out of the JSON form so identical runs serialize identically

  [[nodiscard]] bool ok() const { return status == "ok"; }

  void init_matrix(int k) {
    tasks = k;
    accuracy.assign(static_cast<std::size_t>(k), std::vector<std::optional<double>>(static_cast<std::size_t>(k)));
  }

  void set(int task, int after, double acc) {
    SEQCL_CHECK(task >= 0 && after >= task && after < tasks, "RunRecord: accuracy index out of range");
    accuracy[static_cast<std::size_t>(task)][static_cast<std::size_t>(after)] = acc;
  }

  [[nodiscard]] double at(int task, int after) const {
    const auto& v = accuracy.at(static_cast<std::size_t>(task)).at(static_cast<std::size_t>(after));
    SEQCL_CHECK(v.has_value(), "RunRecord: accuracy of task " + std::to_string(task) + " after task " +
                                   std::to_string(after) + " was not recorded");
    return *v;
  }
};

struct DuringFinal {
  double during = 0.0;
  double final = 0.0;
};

/// during = mean_k A[k][k], final = mean_k A[k][K-1].
inline DuringFinal during_final_metrics(const RunRecord& rec) {
  SEQCL_CHECK(rec.ok(), "during_final_metrics: run failed (" + rec.failure + ")");
  SEQCL_CHECK(rec.tasks >= 1, "during_final_metrics: empty record");
  DuringFinal m;
  for (int k = 0; k < rec.tasks; ++k) {
    m.during += rec.at(k, k);
    m.final += rec.at(k, rec.tasks - 1);
  }
  m.during /= rec.tasks;
  m.final /= rec.tasks;
  return m;
}

inline nlohmann::ordered_json to_json(const RunRecord& rec) {
  nlohmann::ordered_json j;
  j["method"] = rec.method;
  j["variant"] = rec.variant;
  j["tasks"] = rec.tasks;
  j["p"] = rec.p;
  j["i"] = rec.i;
  j["r"] = rec.r;
  j["seed"] = rec.seed;
  j["config_hash"] = rec.config_hash;
  j["config"] = rec.config;
  j["status"] = rec.status;
  if (!rec.ok()) {
    j["failure"] = rec.failure;
    j["failed_task"] = rec.failed_task;
    j["failed_iter"] = rec.failed_iter;
    j["accuracy"] = nlohmann::ordered_json::array();
    return j;
  }
  nlohmann::ordered_json a = nlohmann::ordered_json::array();
  for (const auto& row : rec.accuracy) {
    nlohmann::ordered_json r = nlohmann::ordered_json::array();
    for (const auto& v : row) r.push_back(v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr));
    a.push_back(std::move(r));
  }
  j["accuracy"] = std::move(a);
  const DuringFinal m = during_final_metrics(rec);
  j["during"] = m.during;
  j["final"] = m.final;
  return j;
}

inline RunRecord record_from_json(const nlohmann::ordered_json& j) {
  RunRecord rec;
  try {
    rec.method = j.at("method").get<std::string>();
    rec.variant = j.at("variant").get<std::string>();
    rec.tasks = j.at("tasks").get<int>();
    rec.p = j.at("p").get<int>();
    rec.i = j.at("i").get<int>();
    rec.r = j.at("r").get<int>();
    rec.seed = j.at("seed").get<std::uint64_t>();
    rec.config_hash = j.at("config_hash").get<std::string>();
    rec.config = j.at("config").get<std::map<std::string, std::string>>();
    rec.status = j.at("status").get<std::string>();
    if (rec.status != "ok") {
      rec.failure = j.value("failure", "");
      rec.failed_task = j.value("failed_task", -1);
      rec.failed_iter = j.value("failed_iter", -1L);
      return rec;
    }
    rec.init_matrix(rec.tasks);
    const auto& a = j.at("accuracy");
    SEQCL_CHECK(a.is_array() && static_cast<int>(a.size()) == rec.tasks, "accuracy matrix has the wrong size");
    for (int k = 0; k < rec.tasks; ++k)
      for (int t = 0; t < rec.tasks; ++t) {
        const auto& v = a[static_cast<std::size_t>(k)].at(static_cast<std::size_t>(t));
        if (!v.is_null()) rec.set(k, t, v.get<double>());
      }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("seqcl: malformed run record: ") + e.what());
  }
  return rec;
}

/// Pretty-printed JSON with a trailing newline.
inline std::string record_to_string(const RunRecord& rec) { return to_json(rec).dump(2) + "\n"; }

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("seqcl: cannot write '" + path + "'");
  f << text;
}

}  // namespace seqcl::harness
