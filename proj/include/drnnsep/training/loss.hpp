// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include "drnnsep/common.hpp"

namespace drnnsep {

struct LossConfig {
  /// Weight of the cross-source terms; 0 gives plain squared error.
  double gamma = 0.05;
  /// Train on masked outputs (joint) or on the raw network outputs.
  bool use_masking_layer = true;

  void validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0))
      throw ConfigError(detail::concat("gamma must lie in [0, 1], got ", gamma));
  }
};

/// J = 1/2 sum_t (|y1~ - y1|^2 + |y2~ - y2|^2).
inline double loss_mse(const Matrix& y1_est, const Matrix& y2_est, const Matrix& y1, const Matrix& y2) {
  detail::require_same_shape(y1_est, y1, "loss_mse");
  detail::require_same_shape(y2_est, y2, "loss_mse");
  return 0.5 * ((y1_est - y1).squaredNorm() + (y2_est - y2).squaredNorm());
}

/// J = 1/2 sum_t (|y1 - y1~|^2 + |y2 - y2~|^2 - gamma |y1 - y2~|^2 - gamma |y2 - y1~|^2).
inline double loss_discriminative(const Matrix& y1_est, const Matrix& y2_est, const Matrix& y1,
                                  const Matrix& y2, double gamma) {
  LossConfig{gamma, true}.validate();
  detail::require_same_shape(y1_est, y1, "loss_discriminative");
  detail::require_same_shape(y2_est, y2, "loss_discriminative");
  detail::require_same_shape(y1_est, y2_est, "loss_discriminative");
  return 0.5 * ((y1 - y1_est).squaredNorm() + (y2 - y2_est).squaredNorm() -
                gamma * (y1 - y2_est).squaredNorm() - gamma * (y2 - y1_est).squaredNorm());
}

/// Loss value and its derivative with respect to both estimates.
struct LossGradient {
  double value = 0.0;
  Matrix d1;
  Matrix d2;
};

inline LossGradient loss_with_gradient(const Matrix& y1_est, const Matrix& y2_est, const Matrix& y1,
                                       const Matrix& y2, double gamma) {
  LossGradient out;
  out.value = gamma == 0.0 ? loss_mse(y1_est, y2_est, y1, y2)
                           : loss_discriminative(y1_est, y2_est, y1, y2, gamma);
  out.d1 = (y1_est - y1) - gamma * (y1_est - y2);
  out.d2 = (y2_est - y2) - gamma * (y2_est - y1);
  return out;
}

}  // namespace drnnsep
