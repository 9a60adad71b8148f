// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

#include "drnnsep/common.hpp"
#include "drnnsep/model/forward.hpp"
#include "drnnsep/training/loss.hpp"
#include "drnnsep/training/sequences.hpp"

namespace drnnsep {

struct GradientResult {
  double loss = 0.0;
  Vector gradient;  // same layout as DrnnModel::parameters()
};

namespace detail {

/// d m / d y1^ and d m / d y2^ of m = |y1^| / (|y1^| + |y2^|), with
/// d|x|/dx = 0 at x = 0 and zero slope where the mask is clamped at 0.5.
inline void mask_backward(const ForwardTrace& tr, const Matrix& z, const Matrix& d1_tilde,
                          const Matrix& d2_tilde, Matrix& d1_hat, Matrix& d2_hat) {
  d1_hat.resize(z.rows(), z.cols());
  d2_hat.resize(z.rows(), z.cols());
  const auto sign = [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); };
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double a = std::abs(tr.y1_hat(i, j)), c = std::abs(tr.y2_hat(i, j));
      const double s = a + c;
      if (s < kMaskDenominatorFloor) {
        d1_hat(i, j) = 0.0;
        d2_hat(i, j) = 0.0;
        continue;
      }
      const double dm = z(i, j) * (d1_tilde(i, j) - d2_tilde(i, j));
      const double s2 = s * s;
      d1_hat(i, j) = dm * sign(tr.y1_hat(i, j)) * c / s2;
      d2_hat(i, j) = -dm * sign(tr.y2_hat(i, j)) * a / s2;
    }
  }
}

/// Backpropagation through time for one sequence; accumulates into `grad`.
inline double accumulate_sequence_gradient(const DrnnModel& model, const Sequence& seq,
                                           const LossConfig& cfg, Vector& grad) {
  const int hidden = model.architecture().hidden_layers();
  const int bins = model.architecture().bins();
  ForwardTrace tr = forward(model, seq.inputs);

  Matrix d1_hat, d2_hat;
  double value;
  if (cfg.use_masking_layer) {
    apply_masking_layer(tr, seq.z);
    LossGradient lg = loss_with_gradient(tr.y1_tilde, tr.y2_tilde, seq.y1, seq.y2, cfg.gamma);
    value = lg.value;
    mask_backward(tr, seq.z, lg.d1, lg.d2, d1_hat, d2_hat);
  } else {
    LossGradient lg = loss_with_gradient(tr.y1_hat, tr.y2_hat, seq.y1, seq.y2, cfg.gamma);
    value = lg.value;
    d1_hat = std::move(lg.d1);
    d2_hat = std::move(lg.d2);
  }
  if (!std::isfinite(value)) throw NumericError("non-finite loss", hidden + 1);

  const Eigen::Index frames = seq.inputs.rows();
  Matrix delta(frames, 2 * bins);
  delta << d1_hat, d2_hat;

  const auto& layout = model.layout();
  for (int k = hidden; k >= 0; --k) {
    const LayerBlocks& blk = layout[k];
    const Matrix& below = k == 0 ? seq.inputs : tr.hidden[k - 1];
    if (k < hidden) {
      // delta holds dJ/dh for layer k; turn it into dJ/da.
      const Matrix& pre = tr.pre[k];
      if (blk.recurrent) {
        const auto u = model.recurrent(k);
        Vector carry = Vector::Zero(blk.out);
        for (Eigen::Index t = frames - 1; t >= 0; --t) {
          for (int i = 0; i < blk.out; ++i) {
            const double dh = delta(t, i) + carry[i];
            delta(t, i) = pre(t, i) > 0.0 ? dh : 0.0;
          }
          carry.noalias() = u.transpose() * delta.row(t).transpose();
        }
        Eigen::Map<RowMajorMatrix> gu(grad.data() + blk.u, blk.out, blk.out);
        if (frames > 1)
          gu.noalias() += delta.bottomRows(frames - 1).transpose() * tr.hidden[k].topRows(frames - 1);
        gu.noalias() += delta.row(0).transpose() * tr.h0[k].transpose();
      } else {
        delta = (pre.array() > 0.0).select(delta, 0.0);
      }
    }
    Eigen::Map<RowMajorMatrix> gw(grad.data() + blk.w, blk.out, blk.in);
    gw.noalias() += delta.transpose() * below;
    Eigen::Map<Vector>(grad.data() + blk.b, blk.out) += delta.colwise().sum().transpose();
    if (k > 0) {
      Matrix next = delta * model.weight(k);
      delta = std::move(next);
    }
  }
  return value;
}

/// Fixed partition used for gradient accumulation, independent of the number
/// of hardware threads so results do not depend on the machine.
inline constexpr std::size_t kGradientChunks = 8;

}  // namespace detail

/// Exact gradient of the summed loss over all sequences in `batch`. Each
/// sequence starts from a zero hidden state. Sequences are split into a fixed
/// number of contiguous chunks that may run on separate threads; chunk results
/// are reduced in chunk order.
inline GradientResult gradient(const DrnnModel& model, const TrainingBatch& batch, const LossConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = model.parameters().size();
  const std::size_t count = batch.size();
  const std::size_t chunks = std::min(detail::kGradientChunks, std::max<std::size_t>(count, 1));
  std::vector<Vector> partial(chunks, Vector::Zero(n));
  std::vector<double> losses(chunks, 0.0);
  std::vector<std::exception_ptr> errors(chunks);

  const auto run = [&](std::size_t c) {
    try {
      const std::size_t lo = count * c / chunks, hi = count * (c + 1) / chunks;
      for (std::size_t i = lo; i < hi; ++i)
        losses[c] += detail::accumulate_sequence_gradient(model, batch.sequences[i], cfg, partial[c]);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };

  const unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  if (threads == 1 || chunks == 1) {
    for (std::size_t c = 0; c < chunks; ++c) run(c);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t c = 0; c < chunks; ++c) pool.emplace_back(run, c);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  GradientResult out;
  out.gradient = Vector::Zero(n);
  for (std::size_t c = 0; c < chunks; ++c) {
    out.loss += losses[c];
    out.gradient += partial[c];
  }
  return out;
}

/// Loss only (no backward pass), summed over sequences.
inline double batch_loss(const DrnnModel& model, const TrainingBatch& batch, const LossConfig& cfg) {
  cfg.validate();
  double total = 0.0;
  for (const auto& seq : batch.sequences) {
    ForwardTrace tr = forward(model, seq.inputs);
    if (cfg.use_masking_layer) {
      apply_masking_layer(tr, seq.z);
      total += cfg.gamma == 0.0 ? loss_mse(tr.y1_tilde, tr.y2_tilde, seq.y1, seq.y2)
                                : loss_discriminative(tr.y1_tilde, tr.y2_tilde, seq.y1, seq.y2, cfg.gamma);
    } else {
      total += cfg.gamma == 0.0 ? loss_mse(tr.y1_hat, tr.y2_hat, seq.y1, seq.y2)
                                : loss_discriminative(tr.y1_hat, tr.y2_hat, seq.y1, seq.y2, cfg.gamma);
    }
  }
  return total;
}

}  // namespace drnnsep
