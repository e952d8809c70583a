// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Parameter checkpoint files.
//
//   "SEQCLCKP"            8-byte magic
//   u32 version           currently 1
//   u32 section count
//   per section:          u32 name length, name bytes, u64 rows, u64 cols,
//                         rows * cols f64 values in row-major order
// All integers and floats are little-endian regardless of the host.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "seqcl/core/param_vector.hpp"
#include "seqcl/hnet/hypernet.hpp"

namespace seqcl::io {

inline constexpr char kMagic[8] = {'S', 'E', 'Q', 'C', 'L', 'C', 'K', 'P'};
inline constexpr std::uint32_t kVersion = 1;

struct Section {
  std::string name;
  Mat value;
};

namespace detail {

inline void put_u64(std::string& out, std::uint64_t v, int bytes = 8) {
  for (int k = 0; k < bytes; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xffu));
}

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}

  std::uint64_t u(int bytes) {
    need(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int k = 0; k < bytes; ++k) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + k])) << (8 * k);
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  [[nodiscard]] bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw Error("seqcl: checkpoint is truncated");
  }
  std::string data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_checkpoint(const std::vector<Section>& sections) {
  std::string out(kMagic, kMagic + 8);
  detail::put_u64(out, kVersion, 4);
  detail::put_u64(out, sections.size(), 4);
  for (const auto& s : sections) {
    detail::put_u64(out, s.name.size(), 4);
    out += s.name;
    detail::put_u64(out, static_cast<std::uint64_t>(s.value.rows()));
    detail::put_u64(out, static_cast<std::uint64_t>(s.value.cols()));
    for (Eigen::Index k = 0; k < s.value.size(); ++k) detail::put_u64(out, std::bit_cast<std::uint64_t>(s.value.data()[k]));
  }
  return out;
}

inline std::vector<Section> decode_checkpoint(std::string data) {
  detail::Reader r(std::move(data));
  if (r.bytes(8) != std::string(kMagic, kMagic + 8)) throw Error("seqcl: not a checkpoint file (bad magic)");
  const auto version = r.u(4);
  if (version != kVersion) throw Error("seqcl: unsupported checkpoint version " + std::to_string(version));
  const auto n = r.u(4);
  std::vector<Section> out;
  for (std::uint64_t k = 0; k < n; ++k) {
    Section s;
    s.name = r.bytes(r.u(4));
    const auto rows = static_cast<Eigen::Index>(r.u(8));
    const auto cols = static_cast<Eigen::Index>(r.u(8));
    s.value.resize(rows, cols);
    for (Eigen::Index j = 0; j < s.value.size(); ++j) s.value.data()[j] = std::bit_cast<double>(r.u(8));
    out.push_back(std::move(s));
  }
  if (!r.done()) throw Error("seqcl: trailing bytes after the last checkpoint section");
  return out;
}

inline void save_checkpoint(const std::string& path, const std::vector<Section>& sections) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("seqcl: cannot write '" + path + "'");
  const std::string data = encode_checkpoint(sections);
  f.write(data.data(), static_cast<std::streamsize>(data.size()));
}

inline std::vector<Section> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("seqcl: cannot read '" + path + "'");
  std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint(std::move(data));
}

/// One section per view, named prefix + view name.
inline std::vector<Section> param_sections(const ParamVector& p, const std::string& prefix = "") {
  std::vector<Section> out;
  for (const auto& v : p.layout().views()) out.push_back({prefix + v.name, Mat(p.view(v.name))});
  return out;
}

/// Fills every view of `p` from the sections named prefix + view name.
inline void load_params(ParamVector& p, const std::vector<Section>& sections, const std::string& prefix = "") {
  for (const auto& v : p.layout().views()) {
    const std::string name = prefix + v.name;
    const Section* found = nullptr;
    for (const auto& s : sections)
      if (s.name == name) found = &s;
    if (!found) throw Error("seqcl: checkpoint has no section '" + name + "'");
    if (found->value.rows() != v.rows || found->value.cols() != v.cols)
      throw Error("seqcl: checkpoint section '" + name + "' has shape " + shape_str(found->value) + ", expected " +
                  std::to_string(v.rows) + "x" + std::to_string(v.cols));
    p.view(v.name) = found->value;
  }
}

/// theta/..., emb/... and, when present, the regularization targets ckpt/target<k>.
inline std::vector<Section> hnet_sections(const hnet::Hypernet& net) {
  std::vector<Section> out = param_sections(net.theta(), "theta/");
  for (auto& s : param_sections(net.embeddings(), "emb/")) out.push_back(std::move(s));
  if (const auto& ck = net.checkpoint_state())
    for (std::size_t k = 0; k < ck->targets.size(); ++k) out.push_back({"ckpt/target" + std::to_string(k), as_column(ck->targets[k])});
  return out;
}

}  // namespace seqcl::io
