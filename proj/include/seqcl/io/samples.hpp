// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Copy-Task samples as JSON lines: {"task_id": k, "x": [[...]], "y": [[...]], "loss_weight": [[...]]}.

#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "seqcl/data/copy_task.hpp"

namespace seqcl::io {

namespace detail {

inline nlohmann::json mat_to_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Mat mat_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error("seqcl: sample matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) throw Error("seqcl: ragged sample matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

}  // namespace detail

struct TaggedSample {
  int task_id = 0;
  data::Sample sample;
};

inline void write_samples_jsonl(std::ostream& out, const std::vector<data::Sample>& samples, int task_id) {
  for (const auto& s : samples) {
    nlohmann::ordered_json j;
    j["task_id"] = task_id;
    j["x"] = detail::mat_to_json(s.x);
    j["y"] = detail::mat_to_json(s.y);
    j["loss_weight"] = detail::mat_to_json(s.loss_weight);
    out << j.dump() << "\n";
  }
}

inline std::vector<TaggedSample> read_samples_jsonl(std::istream& in) {
  std::vector<TaggedSample> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      TaggedSample t;
      t.task_id = j.at("task_id").get<int>();
      t.sample.x = detail::mat_from_json(j.at("x"));
      t.sample.y = detail::mat_from_json(j.at("y"));
      t.sample.loss_weight = detail::mat_from_json(j.at("loss_weight"));
      out.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw Error("seqcl: sample line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace seqcl::io
