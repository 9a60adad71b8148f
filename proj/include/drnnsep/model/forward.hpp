// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <utility>
#include <vector>

#include "drnnsep/common.hpp"
#include "drnnsep/model/drnn.hpp"
#include "drnnsep/signal/features.hpp"

namespace drnnsep {

/// Below this |y1| + |y2| the mask is fixed at 0.5.
inline constexpr double kMaskDenominatorFloor = 1e-12;

/// Everything computed by one pass over a sequence, rows indexed by time.
struct ForwardTrace {
  std::vector<Matrix> pre;     // hidden pre-activations, one T x m_l per layer
  std::vector<Matrix> hidden;  // rectified activations h_t^l
  std::vector<Vector> h0;      // initial state per hidden layer (empty if feed-forward)
  Matrix y1_hat, y2_hat;       // raw network outputs, T x F
  Matrix mask;                 // m_t, T x F (only after masked_forward)
  Matrix y1_tilde, y2_tilde;   // masked outputs, T x F (only after masked_forward)

  bool masked() const { return mask.size() > 0; }
  int frames() const { return static_cast<int>(y1_hat.rows()); }
};

/// m = |a| / (|a| + |b|) elementwise, 0.5 where the denominator vanishes.
template <typename DerivedA, typename DerivedB>
typename DerivedA::PlainObject soft_mask(const Eigen::MatrixBase<DerivedA>& a,
                                         const Eigen::MatrixBase<DerivedB>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("soft_mask: operand shapes differ");
  typename DerivedA::PlainObject m(a.rows(), a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double x = std::abs(a(i, j)), y = std::abs(b(i, j));
      const double s = x + y;
      m(i, j) = s < kMaskDenominatorFloor ? 0.5 : x / s;
    }
  }
  return m;
}

/// (m * z, (1 - m) * z).
template <typename DerivedM, typename DerivedZ>
std::pair<typename DerivedZ::PlainObject, typename DerivedZ::PlainObject> apply_mask_separately(
    const Eigen::MatrixBase<DerivedM>& mask, const Eigen::MatrixBase<DerivedZ>& z) {
  if (mask.rows() != z.rows() || mask.cols() != z.cols())
    throw DimensionError("apply_mask_separately: mask and mixture shapes differ");
  typename DerivedZ::PlainObject s1 = mask.cwiseProduct(z);
  typename DerivedZ::PlainObject s2 = (1.0 - mask.array()).matrix().cwiseProduct(z);
  return {std::move(s1), std::move(s2)};
}

namespace detail {

inline void check_finite(const Matrix& m, int layer) {
  if (!m.allFinite())
    throw NumericError(concat("non-finite activation in layer ", layer), layer);
}

}  // namespace detail

/// Runs the network over a T x D_in input. Feed-forward layers are evaluated
/// for all frames at once; a recurrent layer l adds U^l h_{t-1}^l frame by
/// frame starting from h0 (zeros when `h0` is empty). Raw outputs are split
/// into the two F-dimensional source predictions.
inline ForwardTrace forward(const DrnnModel& model, const Matrix& inputs,
                            const std::vector<Vector>& h0 = {}) {
  const Architecture& arch = model.architecture();
  const int hidden = arch.hidden_layers();
  if (inputs.cols() != arch.input_dim())
    throw DimensionError(detail::concat("input dimension ", inputs.cols(), " does not match model input ",
                                        arch.input_dim()));
  if (!h0.empty() && static_cast<int>(h0.size()) != hidden)
    throw DimensionError("h0 must hold one vector per hidden layer");

  ForwardTrace tr;
  const Eigen::Index frames = inputs.rows();
  tr.pre.resize(hidden);
  tr.hidden.resize(hidden);
  tr.h0.resize(hidden);
  const Matrix* below = &inputs;
  for (int k = 0; k < hidden; ++k) {
    const auto& blk = model.layout()[k];
    Matrix& a = tr.pre[k];
    a.noalias() = *below * model.weight(k).transpose();
    a.rowwise() += model.bias(k).transpose();
    Matrix& h = tr.hidden[k];
    if (blk.recurrent) {
      Vector state = Vector::Zero(blk.out);
      if (!h0.empty()) {
        if (h0[k].size() != 0 && h0[k].size() != blk.out)
          throw DimensionError(detail::concat("h0 for layer ", k + 1, " has wrong size"));
        if (h0[k].size() != 0) state = h0[k];
      }
      tr.h0[k] = state;
      const auto u = model.recurrent(k);
      h.resize(frames, blk.out);
      for (Eigen::Index t = 0; t < frames; ++t) {
        a.row(t) += (u * state).transpose();
        h.row(t) = a.row(t).cwiseMax(0.0);
        state = h.row(t).transpose();
      }
    } else {
      h = a.cwiseMax(0.0);
    }
    detail::check_finite(h, k + 1);
    below = &h;
  }
  Matrix out = *below * model.weight(hidden).transpose();
  out.rowwise() += model.bias(hidden).transpose();
  detail::check_finite(out, hidden + 1);
  const int bins = arch.bins();
  tr.y1_hat = out.leftCols(bins);
  tr.y2_hat = out.rightCols(bins);
  return tr;
}

inline ForwardTrace forward(const DrnnModel& model, const FeatureSequence& inputs,
                            const std::vector<Vector>& h0 = {}) {
  return forward(model, inputs.vectors, h0);
}

/// Adds the masking layer to an unmasked trace:
///   y1~ = |y1^| / (|y1^| + |y2^|) * z,  y2~ = (1 - m) * z.
inline void apply_masking_layer(ForwardTrace& tr, const Matrix& z) {
  detail::require_same_shape(z, tr.y1_hat, "masked_forward: mixture magnitudes");
  tr.mask = soft_mask(tr.y1_hat, tr.y2_hat);
  auto [s1, s2] = apply_mask_separately(tr.mask, z);
  tr.y1_tilde = std::move(s1);
  tr.y2_tilde = std::move(s2);
}

/// forward() followed by the joint masking layer on mixture magnitudes z (T x F).
inline ForwardTrace masked_forward(const DrnnModel& model, const Matrix& inputs, const Matrix& z,
                                   const std::vector<Vector>& h0 = {}) {
  if (z.rows() != inputs.rows())
    throw DimensionError("masked_forward: mixture and inputs have different frame counts");
  ForwardTrace tr = forward(model, inputs, h0);
  apply_masking_layer(tr, z);
  return tr;
}

inline ForwardTrace masked_forward(const DrnnModel& model, const FeatureSequence& inputs,
                                   const Matrix& z, const std::vector<Vector>& h0 = {}) {
  return masked_forward(model, inputs.vectors, z, h0);
}

}  // namespace drnnsep
