// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "drnnsep/common.hpp"

namespace drnnsep {

/// Added inside every division of the multiplicative updates.
inline constexpr double kNmfEpsilon = 1e-12;

/// F x K nonnegative basis with L1-normalised columns.
struct NmfBasis {
  Matrix vectors;

  int bins() const { return static_cast<int>(vectors.rows()); }
  int count() const { return static_cast<int>(vectors.cols()); }
};

struct NmfTrainResult {
  NmfBasis basis;
  Matrix activations;              // K x T, rescaled to match the normalised basis
  std::vector<double> objective;   // D_KL(V || BH) before the first and after each iteration
};

/// Generalised KL divergence sum V log(V / L) - V + L, with 0 log 0 = 0.
inline double kl_divergence(const Matrix& v, const Matrix& approx) {
  detail::require_same_shape(v, approx, "kl_divergence");
  double d = 0.0;
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      const double a = v(i, j), l = approx(i, j);
      d += (a > 0.0 ? a * std::log(a / l) : 0.0) - a + l;
    }
  }
  return d;
}

namespace detail {

inline Matrix uniform_init(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  // uniform on (0, 1]
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = 1.0 - dist(rng);
  return m;
}

inline void check_nonnegative(const Matrix& v, const char* what) {
  if (!v.allFinite() || (v.array() < 0.0).any())
    throw InputError(concat(what, ": matrix must be finite and nonnegative"));
}

/// H <- H * (B^T (V / (BH + eps))) / (B^T 1 + eps)
inline void update_activations(const Matrix& v, const Matrix& b, Matrix& h) {
  const Matrix ratio = v.array() / ((b * h).array() + kNmfEpsilon);
  const Vector col_sums = b.colwise().sum().transpose();
  h.array() *= (b.transpose() * ratio).array().colwise() / (col_sums.array() + kNmfEpsilon);
}

/// B <- B * ((V / (BH + eps)) H^T) / (1 H^T + eps)
inline void update_basis(const Matrix& v, Matrix& b, const Matrix& h) {
  const Matrix ratio = v.array() / ((b * h).array() + kNmfEpsilon);
  const Vector row_sums = h.rowwise().sum();
  b.array() *= (ratio * h.transpose()).array().rowwise() / (row_sums.transpose().array() + kNmfEpsilon);
}

}  // namespace detail

/// Multiplicative-update NMF of V (F x T) under the generalised KL
/// divergence. Entries of B and H start uniform in (0, 1]; H is updated first
/// in each iteration, then B. Columns of B are L1-normalised at the end with
/// the scale moved into H, which leaves BH unchanged.
inline NmfTrainResult nmf_train(const Matrix& v, int k, int iterations = 200, std::uint64_t seed = 1) {
  if (k < 1) throw ConfigError("nmf_train: basis count must be >= 1");
  if (iterations < 0) throw ConfigError("nmf_train: iterations must be >= 0");
  detail::check_nonnegative(v, "nmf_train");
  if (v.size() == 0 || v.sum() == 0.0) throw InputError("nmf_train: input is all zero");

  std::mt19937_64 rng(seed);
  Matrix b = detail::uniform_init(v.rows(), k, rng);
  Matrix h = detail::uniform_init(k, v.cols(), rng);
  NmfTrainResult out;
  out.objective.reserve(static_cast<std::size_t>(iterations) + 1);
  out.objective.push_back(kl_divergence(v, b * h));
  for (int it = 0; it < iterations; ++it) {
    detail::update_activations(v, b, h);
    detail::update_basis(v, b, h);
    out.objective.push_back(kl_divergence(v, b * h));
  }
  for (int c = 0; c < k; ++c) {
    const double s = b.col(c).sum();
    if (s > 0.0) {
      b.col(c) /= s;
      h.row(c) *= s;
    }
  }
  out.basis.vectors = std::move(b);
  out.activations = std::move(h);
  return out;
}

struct NmfSeparation {
  Matrix source1;            // F x T
  Matrix source2;            // F x T
  Matrix activations;        // (K1 + K2) x T
  std::vector<double> objective;
};

/// Fits activations for the stacked basis [B1 B2] with the bases held fixed,
/// then splits the mixture with the ratio mask B1H1 / (B1H1 + B2H2).
inline NmfSeparation nmf_separate(const Matrix& mixture, const NmfBasis& basis1, const NmfBasis& basis2,
                                  int iterations = 100, std::uint64_t seed = 1) {
  if (basis1.bins() != mixture.rows() || basis2.bins() != mixture.rows())
    throw DimensionError(detail::concat("nmf_separate: mixture has ", mixture.rows(), " bins, bases have ",
                                        basis1.bins(), " and ", basis2.bins()));
  detail::check_nonnegative(mixture, "nmf_separate");
  const int k1 = basis1.count(), k2 = basis2.count();
  Matrix b(mixture.rows(), k1 + k2);
  b << basis1.vectors, basis2.vectors;

  std::mt19937_64 rng(seed);
  Matrix h = detail::uniform_init(k1 + k2, mixture.cols(), rng);
  NmfSeparation out;
  out.objective.push_back(kl_divergence(mixture, b * h));
  for (int it = 0; it < iterations; ++it) {
    detail::update_activations(mixture, b, h);
    out.objective.push_back(kl_divergence(mixture, b * h));
  }
  const Matrix part1 = basis1.vectors * h.topRows(k1);
  const Matrix part2 = basis2.vectors * h.bottomRows(k2);
  out.source1.resize(mixture.rows(), mixture.cols());
  for (Eigen::Index j = 0; j < mixture.cols(); ++j) {
    for (Eigen::Index i = 0; i < mixture.rows(); ++i) {
      const double s = part1(i, j) + part2(i, j);
      out.source1(i, j) = (s > 0.0 ? part1(i, j) / s : 0.5) * mixture(i, j);
    }
  }
  out.source2 = mixture - out.source1;
  out.activations = std::move(h);
  return out;
}

}  // namespace drnnsep
