// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "seqcl/core/tape.hpp"
#include "seqcl/core/types.hpp"

namespace seqcl {

/// A named rows x cols window into a flat parameter vector (row-major).
struct ViewSpec {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index offset = 0;

  [[nodiscard]] Eigen::Index size() const { return rows * cols; }
  [[nodiscard]] Eigen::Index end() const { return offset + size(); }
};

/// Ordered, contiguous, disjoint list of views. Views are appended back to back.
class ParamLayout {
 public:
  ParamLayout& add(std::string name, Eigen::Index rows, Eigen::Index cols) {
    SEQCL_CHECK(rows >= 1 && cols >= 1, "ParamLayout: empty view '" + name + "'");
    SEQCL_CHECK(!contains(name), "ParamLayout: duplicate view '" + name + "'");
    views_.push_back({std::move(name), rows, cols, size_});
    size_ += rows * cols;
    return *this;
  }

  [[nodiscard]] bool contains(const std::string& name) const {
    for (const auto& v : views_)
      if (v.name == name) return true;
    return false;
  }

  [[nodiscard]] const ViewSpec& find(const std::string& name) const {
    for (const auto& v : views_)
      if (v.name == name) return v;
    throw Error("seqcl: ParamLayout: no view named '" + name + "'");
  }

  /// View containing flat index i.
  [[nodiscard]] const ViewSpec& owner(Eigen::Index i) const {
    for (const auto& v : views_)
      if (i >= v.offset && i < v.end()) return v;
    throw Error("seqcl: ParamLayout: index out of range");
  }

  [[nodiscard]] const std::vector<ViewSpec>& views() const { return views_; }
  [[nodiscard]] Eigen::Index size() const { return size_; }

  friend bool operator==(const ParamLayout& a, const ParamLayout& b) {
    if (a.size_ != b.size_ || a.views_.size() != b.views_.size()) return false;
    for (std::size_t i = 0; i < a.views_.size(); ++i) {
      const auto &x = a.views_[i], &y = b.views_[i];
      if (x.name != y.name || x.rows != y.rows || x.cols != y.cols || x.offset != y.offset) return false;
    }
    return true;
  }

 private:
  std::vector<ViewSpec> views_;
  Eigen::Index size_ = 0;
};

/// Flat parameter vector with named matrix views.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(ParamLayout layout)
      : layout_(std::move(layout)), entries_(Vec::Zero(layout_.size())) {}
  ParamVector(ParamLayout layout, Vec entries) : layout_(std::move(layout)), entries_(std::move(entries)) {
    SEQCL_CHECK(entries_.size() == layout_.size(), "ParamVector: entries do not match layout size");
  }

  [[nodiscard]] const ParamLayout& layout() const { return layout_; }
  [[nodiscard]] const Vec& entries() const { return entries_; }
  [[nodiscard]] Vec& entries() { return entries_; }
  [[nodiscard]] Eigen::Index size() const { return entries_.size(); }

  [[nodiscard]] Eigen::Map<Mat> view(const std::string& name) {
    const auto& v = layout_.find(name);
    return {entries_.data() + v.offset, v.rows, v.cols};
  }
  [[nodiscard]] Eigen::Map<const Mat> view(const std::string& name) const {
    const auto& v = layout_.find(name);
    return {entries_.data() + v.offset, v.rows, v.cols};
  }

 private:
  ParamLayout layout_;
  Vec entries_;
};

/// Named tape views over a column-vector node laid out by `layout`.
class ParamViews {
 public:
  ParamViews(const ParamLayout& layout, ad::Var flat) : layout_(&layout), flat_(flat) {
    SEQCL_CHECK(flat.rows() == layout.size() && flat.cols() == 1,
                "ParamViews: node does not match layout size");
  }

  [[nodiscard]] ad::Var operator[](const std::string& name) const {
    const auto& v = layout_->find(name);
    return ad::view(flat_, v.offset, v.rows, v.cols);
  }
  [[nodiscard]] ad::Var flat() const { return flat_; }
  [[nodiscard]] const ParamLayout& layout() const { return *layout_; }

 private:
  const ParamLayout* layout_;
  ad::Var flat_;
};

inline Mat as_column(const Vec& v) { return Eigen::Map<const Mat>(v.data(), v.size(), 1); }
inline Vec as_vec(const Mat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }

}  // namespace seqcl
