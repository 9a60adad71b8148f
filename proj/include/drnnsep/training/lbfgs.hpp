// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <vector>

#include "drnnsep/common.hpp"

namespace drnnsep {

/// Objective callback: returns f(x) and writes the gradient into `grad`.
using Objective = std::function<double(const Vector& x, Vector& grad)>;

struct WolfeParams {
  double c1 = 1e-4;  // sufficient decrease
  double c2 = 0.9;   // curvature
  int max_evaluations = 25;
};

/// Strong Wolfe conditions at step `alpha`:
///   f(x + a d) <= f(x) + c1 a g.d   and   |g(x + a d).d| <= c2 |g.d|
inline bool strong_wolfe(double f0, double slope0, double alpha, double f, double slope,
                         const WolfeParams& p) {
  return f <= f0 + p.c1 * alpha * slope0 && std::abs(slope) <= p.c2 * std::abs(slope0);
}

struct LineSearchResult {
  bool ok = false;
  double step = 0.0;
  double f = 0.0;
  Vector x;
  Vector grad;
  int evaluations = 0;
};

namespace detail {

/// Minimiser of the cubic interpolating (a, fa, da) and (b, fb, db),
/// safeguarded to the middle 80% of the interval; bisection as fallback.
inline double cubic_step(double a, double fa, double da, double b, double fb, double db) {
  const double lo = std::min(a, b), hi = std::max(a, b);
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  double t = 0.5 * (a + b);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double denom = db - da + 2.0 * d2;
    if (denom != 0.0) t = b - (b - a) * (db + d2 - d1) / denom;
  }
  const double margin = 0.1 * (hi - lo);
  if (!std::isfinite(t) || t < lo + margin || t > hi - margin) t = 0.5 * (a + b);
  return t;
}

}  // namespace detail

/// Bracketing line search with cubic zoom for the strong Wolfe conditions.
inline LineSearchResult strong_wolfe_search(const Objective& fn, const Vector& x0, double f0,
                                            const Vector& g0, const Vector& dir, double alpha0,
                                            const WolfeParams& p = {}) {
  LineSearchResult res;
  const double slope0 = g0.dot(dir);
  if (!(slope0 < 0.0)) return res;

  Vector g(x0.size());
  const auto eval = [&](double a, double& f, double& slope) {
    res.x = x0 + a * dir;
    f = fn(res.x, g);
    slope = g.dot(dir);
    ++res.evaluations;
  };
  const auto accept = [&](double a, double f) {
    res.ok = true;
    res.step = a;
    res.f = f;
    res.grad = g;
    return res;
  };

  double a_prev = 0.0, f_prev = f0, s_prev = slope0;
  double a = alpha0;
  double lo = 0, f_lo = 0, s_lo = 0, hi = 0, f_hi = 0, s_hi = 0;
  bool bracketed = false;
  while (res.evaluations < p.max_evaluations) {
    double f, s;
    eval(a, f, s);
    if (!std::isfinite(f) || f > f0 + p.c1 * a * slope0 || (res.evaluations > 1 && f >= f_prev)) {
      lo = a_prev; f_lo = f_prev; s_lo = s_prev;
      hi = a; f_hi = std::isfinite(f) ? f : HUGE_VAL; s_hi = std::isfinite(s) ? s : 0.0;
      bracketed = true;
      break;
    }
    if (std::abs(s) <= -p.c2 * slope0) return accept(a, f);
    if (s >= 0.0) {
      lo = a; f_lo = f; s_lo = s;
      hi = a_prev; f_hi = f_prev; s_hi = s_prev;
      bracketed = true;
      break;
    }
    a_prev = a; f_prev = f; s_prev = s;
    a *= 2.0;
  }
  if (!bracketed) return res;

  while (res.evaluations < p.max_evaluations) {
    const double a_j = std::isfinite(f_hi) && f_hi < HUGE_VAL
                           ? detail::cubic_step(lo, f_lo, s_lo, hi, f_hi, s_hi)
                           : 0.5 * (lo + hi);
    if (std::abs(hi - lo) <= 1e-16 * std::max(1.0, std::abs(lo))) break;
    double f, s;
    eval(a_j, f, s);
    if (!std::isfinite(f) || f > f0 + p.c1 * a_j * slope0 || f >= f_lo) {
      hi = a_j; f_hi = std::isfinite(f) ? f : HUGE_VAL; s_hi = std::isfinite(s) ? s : 0.0;
    } else {
      if (std::abs(s) <= -p.c2 * slope0) return accept(a_j, f);
      if (s * (hi - lo) >= 0.0) {
        hi = lo; f_hi = f_lo; s_hi = s_lo;
      }
      lo = a_j; f_lo = f; s_lo = s;
    }
  }
  res.ok = false;
  return res;
}

/// Limited-memory inverse Hessian approximation (two-loop recursion).
class LbfgsHistory {
 public:
  explicit LbfgsHistory(int capacity) : capacity_(capacity) {
    if (capacity < 1) throw ConfigError("L-BFGS history size must be positive");
  }

  /// Stores (s, y) when the curvature s.y is positive; returns whether kept.
  bool push(Vector s, Vector y) {
    const double sy = s.dot(y);
    if (!(sy > 1e-12 * s.norm() * y.norm())) return false;
    if (static_cast<int>(s_.size()) == capacity_) {
      s_.pop_front();
      y_.pop_front();
      rho_.pop_front();
    }
    rho_.push_back(1.0 / sy);
    s_.push_back(std::move(s));
    y_.push_back(std::move(y));
    return true;
  }

  void clear() {
    s_.clear();
    y_.clear();
    rho_.clear();
  }

  std::size_t size() const { return s_.size(); }

  /// -H g with H0 = (s.y / y.y) I from the newest pair (identity if empty).
  Vector direction(const Vector& g) const {
    Vector q = g;
    const std::size_t m = s_.size();
    std::vector<double> alpha(m);
    for (std::size_t i = m; i-- > 0;) {
      alpha[i] = rho_[i] * s_[i].dot(q);
      q -= alpha[i] * y_[i];
    }
    if (m > 0) q *= s_.back().dot(y_.back()) / y_.back().squaredNorm();
    for (std::size_t i = 0; i < m; ++i) {
      const double beta = rho_[i] * y_[i].dot(q);
      q += (alpha[i] - beta) * s_[i];
    }
    return -q;
  }

 private:
  int capacity_;
  std::deque<Vector> s_, y_;
  std::deque<double> rho_;
};

}  // namespace drnnsep
