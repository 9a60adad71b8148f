// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace drnnsep {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or parameter choice (bad hop, even context width...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Shapes of two operands do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input is well-formed but unusable (silent source, all-zero matrix...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Malformed, truncated or corrupt file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value encountered. `layer()` is -1 when not tied to a layer.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, int layer = -1)
      : Error(what), layer_(layer) {}
  int layer() const { return layer_; }

 private:
  int layer_;
};

namespace detail {

template <typename... Args>
std::string concat(Args&&... args) {
  std::ostringstream os;
  (os << ... << std::forward<Args>(args));
  return os.str();
}

inline void require_same_shape(const Matrix& a, const Matrix& b,
                               const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(concat(what, ": shape ", a.rows(), "x", a.cols(),
                                " does not match ", b.rows(), "x", b.cols()));
}

}  // namespace detail

/// Values above this are reported as the cap in every dB ratio.
inline constexpr double kDbCap = 200.0;

inline double to_db(double ratio) {
  if (!(ratio > 0.0)) return -kDbCap;
  return std::min(10.0 * std::log10(ratio), kDbCap);
}

}  // namespace drnnsep
