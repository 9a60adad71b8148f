// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "drnnsep/model/drnn.hpp"
#include "drnnsep/training/backprop.hpp"
#include "drnnsep/training/lbfgs.hpp"

namespace drnnsep {

struct OptimizerConfig {
  int max_iterations = 300;
  int history_size = 20;
  /// Sequences per mini-batch; 0 or >= dataset size means full batch.
  int minibatch_sequences = 0;
  /// L-BFGS iterations spent on one mini-batch before drawing the next.
  int batch_iterations = 10;
  std::uint64_t seed = 1;
  /// Stop when |g| <= convergence_tol * max(1, |x|).
  double convergence_tol = 1e-9;
  /// Stop after this many mini-batch rounds without a new best dev loss.
  int patience = 10;
  WolfeParams wolfe;

  void validate() const {
    if (max_iterations < 0) throw ConfigError("max_iterations must be >= 0");
    if (history_size < 1) throw ConfigError("history_size must be positive");
    if (minibatch_sequences < 0) throw ConfigError("minibatch_sequences must be >= 0");
    if (batch_iterations < 1) throw ConfigError("batch_iterations must be positive");
    if (!(convergence_tol > 0.0)) throw ConfigError("convergence_tol must be positive");
    if (patience < 1) throw ConfigError("patience must be positive");
  }
};

enum class StepKind { initial, lbfgs, steepest_fallback };

inline const char* to_string(StepKind k) {
  switch (k) {
    case StepKind::initial: return "initial";
    case StepKind::lbfgs: return "lbfgs";
    case StepKind::steepest_fallback: return "fallback";
  }
  return "?";
}

struct IterationRecord {
  int iteration = 0;
  double train_loss = 0.0;  // mean per sequence on the current mini-batch
  double dev_loss = 0.0;    // mean per sequence on the dev set
  double grad_norm = 0.0;
  double step_size = 0.0;
  double elapsed_ms = 0.0;
  StepKind kind = StepKind::initial;
  bool batch_changed = false;
};

struct TrainResult {
  DrnnModel model;  // snapshot with the best dev loss
  std::vector<IterationRecord> log;
  int best_iteration = 0;
  double best_dev_loss = 0.0;
  std::string stop_reason;
};

/// Mean loss per sequence and its gradient.
inline double mean_objective(DrnnModel& work, const Vector& x, const TrainingBatch& batch,
                             const LossConfig& loss, Vector& grad) {
  work.parameters() = x;
  GradientResult r = gradient(work, batch, loss);
  const double scale = 1.0 / static_cast<double>(batch.size());
  grad = r.gradient * scale;
  return r.loss * scale;
}

inline double mean_loss(const DrnnModel& model, const TrainingBatch& batch, const LossConfig& loss) {
  return batch.empty() ? 0.0 : batch_loss(model, batch, loss) / static_cast<double>(batch.size());
}

/// Mini-batch L-BFGS.
///
/// Each round draws a mini-batch (the whole dataset when minibatch_sequences
/// is 0 or large enough, in which case it never changes) and runs up to
/// batch_iterations L-BFGS steps on the mean loss; the curvature history is
/// cleared whenever the batch changes. Each step uses a strong Wolfe line
/// search; if that fails a backtracking steepest-descent step is tried and
/// recorded. Dev loss is measured after every step and the best snapshot is
/// returned. With no dev set, the training loss selects the snapshot.
inline TrainResult train(const DrnnModel& initial, const TrainingBatch& data, const LossConfig& loss,
                         const OptimizerConfig& opt, const TrainingBatch& dev = {}) {
  loss.validate();
  opt.validate();
  if (data.empty()) throw InputError("train: empty dataset");
  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  };

  const std::size_t n = data.size();
  const bool full_batch = opt.minibatch_sequences == 0 || static_cast<std::size_t>(opt.minibatch_sequences) >= n;
  std::mt19937_64 rng(opt.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  TrainingBatch batch;
  const auto draw_batch = [&] {
    if (full_batch) {
      if (batch.empty()) batch = data;
      return false;
    }
    std::shuffle(order.begin(), order.end(), rng);
    batch.sequences.clear();
    for (int i = 0; i < opt.minibatch_sequences; ++i) batch.sequences.push_back(data.sequences[order[i]]);
    return true;
  };

  DrnnModel work = initial;
  Vector x = initial.parameters();
  Vector g(x.size());
  draw_batch();
  double f = mean_objective(work, x, batch, loss, g);
  if (!std::isfinite(f)) throw NumericError("non-finite training loss at initialisation");

  const auto select_loss = [&](double train_loss) {
    if (dev.empty()) return train_loss;
    work.parameters() = x;
    return mean_loss(work, dev, loss);
  };

  TrainResult result;
  result.model = initial;
  double dev_loss = select_loss(f);
  result.best_dev_loss = dev_loss;
  result.log.push_back({0, f, dev_loss, g.norm(), 0.0, elapsed(), StepKind::initial, true});
  result.stop_reason = "max_iterations";

  LbfgsHistory history(opt.history_size);
  int rounds_without_improvement = 0;
  bool improved_this_round = false;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    bool changed = false;
    if (it > 1 && (it - 1) % opt.batch_iterations == 0) {
      rounds_without_improvement = improved_this_round ? 0 : rounds_without_improvement + 1;
      improved_this_round = false;
      if (rounds_without_improvement >= opt.patience) {
        result.stop_reason = "early_stopping";
        break;
      }
      changed = draw_batch();
      if (changed) {
        history.clear();
        f = mean_objective(work, x, batch, loss, g);
      }
    }
    if (g.norm() <= opt.convergence_tol * std::max(1.0, x.norm())) {
      result.stop_reason = "converged";
      break;
    }

    const Objective objective = [&](const Vector& p, Vector& grad) {
      return mean_objective(work, p, batch, loss, grad);
    };
    Vector dir = history.direction(g);
    if (!(g.dot(dir) < 0.0)) {
      history.clear();
      dir = -g;
    }
    const double alpha0 = history.size() == 0 ? std::min(1.0, 1.0 / g.norm()) : 1.0;
    LineSearchResult ls = strong_wolfe_search(objective, x, f, g, dir, alpha0, opt.wolfe);
    StepKind kind = StepKind::lbfgs;
    double step_norm = 0.0;
    if (ls.ok) {
      step_norm = ls.step * dir.norm();
    } else {
      // Backtracking along the negative gradient.
      kind = StepKind::steepest_fallback;
      history.clear();
      double a = std::min(1.0, 1.0 / g.norm());
      Vector trial_grad(x.size());
      for (int k = 0; k < 60; ++k, a *= 0.5) {
        Vector trial = x - a * g;
        const double ft = objective(trial, trial_grad);
        if (std::isfinite(ft) && ft <= f - 1e-4 * a * g.squaredNorm()) {
          ls.ok = true;
          ls.x = std::move(trial);
          ls.f = ft;
          ls.grad = trial_grad;
          step_norm = a * g.norm();
          break;
        }
      }
      if (!ls.ok) {
        result.stop_reason = "line_search_failed";
        break;
      }
    }
    if (!std::isfinite(ls.f)) throw NumericError("non-finite training loss");

    history.push(ls.x - x, ls.grad - g);
    x = std::move(ls.x);
    g = std::move(ls.grad);
    f = ls.f;

    dev_loss = select_loss(f);
    if (dev_loss < result.best_dev_loss) {
      result.best_dev_loss = dev_loss;
      result.best_iteration = it;
      result.model.parameters() = x;
      improved_this_round = true;
    }
    result.log.push_back({it, f, dev_loss, g.norm(), step_norm, elapsed(), kind, changed});
  }
  return result;
}

}  // namespace drnnsep
