// Copyright 2026 The seqcl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace seqcl {

/// Dense row-major matrix of 64-bit floats. Every tensor in the library is one of these.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

/// Base class of all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (CLI maps this to exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A loss or gradient became non-finite during training.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

#define SEQCL_CHECK(cond, msg)                                   \
  do {                                                           \
    if (!(cond)) throw ::seqcl::Error(std::string("seqcl: ") + (msg)); \
  } while (0)

inline std::string shape_str(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace seqcl
