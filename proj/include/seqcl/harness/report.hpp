// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Report emitters and the on-disk layout of run directories:
//   <name>.json          RunRecord
//   <name>.timing.json   {"wall_s": ...}

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "seqcl/harness/record.hpp"

namespace seqcl::harness {

namespace detail {

inline std::string fmt(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("seqcl: cannot read '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace detail

/// Writes <dir>/<name>.json and its timing sidecar.
inline void save_record(const std::string& dir, const std::string& name, const RunRecord& rec) {
  std::filesystem::create_directories(dir);
  write_text_file(dir + "/" + name + ".json", record_to_string(rec));
  nlohmann::ordered_json t;
  t["wall_s"] = rec.wall_s;
  write_text_file(dir + "/" + name + ".timing.json", t.dump(2) + "\n");
}

/// Every record in `dir`, ordered by file name, with wall-clock times from the sidecars.
inline std::vector<RunRecord> load_records(const std::string& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error("seqcl: '" + dir + "' is not a directory");
  std::vector<std::string> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const std::string f = e.path().filename().string();
    const auto ends = [&](const std::string& suf) {
      return f.size() >= suf.size() && f.compare(f.size() - suf.size(), suf.size(), suf) == 0;
    };
    if (e.is_regular_file() && ends(".json") && !ends(".timing.json") && f != "report.json") files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  std::vector<RunRecord> out;
  for (const auto& path : files) {
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(detail::read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
      throw Error("seqcl: '" + path + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("accuracy")) continue;  // not a run record
    RunRecord rec = record_from_json(j);
    const std::string timing = path.substr(0, path.size() - 5) + ".timing.json";
    if (std::filesystem::exists(timing)) {
      const auto t = nlohmann::json::parse(detail::read_text_file(timing), nullptr, false);
      if (t.is_object() && t.contains("wall_s")) rec.wall_s = t["wall_s"].get<double>();
    }
    out.push_back(std::move(rec));
  }
  return out;
}

inline const char* kCsvHeader = "method,variant,K,p,i,r,seed,during,final,wall_s,status\n";

/// One row per record. Failed runs leave during/final empty and say so in the status column.
inline std::string report_csv(const std::vector<RunRecord>& records) {
  std::string out = kCsvHeader;
  for (const auto& r : records) {
    std::string during, final;
    if (r.ok()) {
      const DuringFinal m = during_final_metrics(r);
      during = detail::fmt(m.during);
      final = detail::fmt(m.final);
    }
    out += r.method + "," + r.variant + "," + std::to_string(r.tasks) + "," + std::to_string(r.p) + "," +
           std::to_string(r.i) + "," + std::to_string(r.r) + "," + std::to_string(r.seed) + "," + during + "," +
           final + "," + detail::fmt(r.wall_s, "%.3f") + "," + r.status + "\n";
  }
  return out;
}

inline std::string report_json(const std::vector<RunRecord>& records) {
  nlohmann::ordered_json a = nlohmann::ordered_json::array();
  for (const auto& r : records) a.push_back(to_json(r));
  return a.dump(2) + "\n";
}

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Standalone SVG line chart with axes, ticks and a legend.
inline std::string svg_line_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                                  const std::vector<Series>& series) {
  const double W = 640, H = 420, L = 70, R = 170, T = 40, B = 60;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool any = false;
  for (const auto& s : series) {
    SEQCL_CHECK(s.x.size() == s.y.size(), "svg_line_chart: x and y lengths differ");
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      if (!any) {
        x0 = x1 = s.x[k];
        y0 = y1 = s.y[k];
        any = true;
      }
      x0 = std::min(x0, s.x[k]);
      x1 = std::max(x1, s.x[k]);
      y0 = std::min(y0, s.y[k]);
      y1 = std::max(y1, s.y[k]);
    }
  }
  if (x1 - x0 < 1e-12) { x0 -= 0.5; x1 += 0.5; }
  if (y1 - y0 < 1e-12) { y0 -= 0.5; y1 += 0.5; }
  const double pw = W - L - R, ph = H - T - B;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return T + ph - (y - y0) / (y1 - y0) * ph; };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << " " << H << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
    << detail::xml_escape(title) << "</text>\n"
    << "<line x1=\"" << L << "\" y1=\"" << T + ph << "\" x2=\"" << L + pw << "\" y2=\"" << T + ph
    << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << T + ph << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    o << "<text x=\"" << detail::fmt(px(xv), "%.1f") << "\" y=\"" << T + ph + 18
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << detail::fmt(xv, "%.3g") << "</text>\n"
      << "<text x=\"" << L - 6 << "\" y=\"" << detail::fmt(py(yv) + 4, "%.1f")
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << detail::fmt(yv, "%.3g") << "</text>\n";
  }
  o << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 16
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << detail::xml_escape(xlabel)
    << "</text>\n"
    << "<text x=\"18\" y=\"" << T + ph / 2 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
    << "transform=\"rotate(-90 18 " << T + ph / 2 << ")\">" << detail::xml_escape(ylabel) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* c = colors[s % 8];
    std::string pts;
    for (std::size_t k = 0; k < series[s].x.size(); ++k) {
      if (!std::isfinite(series[s].x[k]) || !std::isfinite(series[s].y[k])) continue;
      pts += detail::fmt(px(series[s].x[k]), "%.2f") + "," + detail::fmt(py(series[s].y[k]), "%.2f") + " ";
      o << "<circle cx=\"" << detail::fmt(px(series[s].x[k]), "%.2f") << "\" cy=\""
        << detail::fmt(py(series[s].y[k]), "%.2f") << "\" r=\"3\" fill=\"" << c << "\"/>\n";
    }
    if (!pts.empty()) {
      pts.pop_back();
      o << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"" << pts << "\"/>\n";
    }
    const double ly = T + 14 + 18.0 * static_cast<double>(s);
    o << "<line x1=\"" << L + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << L + pw + 32 << "\" y2=\"" << ly
      << "\" stroke=\"" << c << "\" stroke-width=\"2\"/>\n"
      << "<text x=\"" << L + pw + 36 << "\" y=\"" << ly + 4 << "\" font-family=\"sans-serif\" font-size=\"11\">"
      << detail::xml_escape(series[s].label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

/// Final accuracy of each task (after the last task) against the task index, one line per
/// successful record.
inline std::string report_svg(const std::vector<RunRecord>& records) {
  std::vector<Series> series;
  for (const auto& r : records) {
    if (!r.ok()) continue;
    Series s;
    s.label = r.method + " " + r.variant + " seed " + std::to_string(r.seed);
    for (int k = 0; k < r.tasks; ++k) {
      s.x.push_back(k + 1);
      s.y.push_back(100.0 * r.at(k, r.tasks - 1));
    }
    series.push_back(std::move(s));
  }
  return svg_line_chart("Accuracy after the last task", "task index", "accuracy (%)", series);
}

}  // namespace seqcl::harness
