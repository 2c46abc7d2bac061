// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "cgbg/errors.hpp"

namespace cgbg {

struct ODESolverConfig {
  double atol = 1e-4;
  double rtol = 1e-4;
  std::int64_t max_steps = 100000;
  double initial_step = 0.0;  // 0 selects the error-based starter
};

struct SolverStats {
  std::int64_t n_accepted = 0;
  std::int64_t n_rejected = 0;
  std::int64_t n_feval = 0;
};

namespace dopri5_detail {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 10.0;
constexpr double kBeta = 0.04;  // PI stabilization

}  // namespace dopri5_detail

// Adaptive Dormand-Prince 5(4) with PI step-size control on the mixed
// tolerance atol + rtol * |y|. State is any Eigen vector type; integration
// direction follows sign(t1 - t0).
template <typename State, typename Derivs>
State dopri5_integrate(Derivs&& f, State y, double t0, double t1,
                       const ODESolverConfig& cfg, SolverStats* stats = nullptr) {
  using namespace dopri5_detail;
  if (t1 == t0) return y;
  const double dir = t1 > t0 ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);

  double t = t0;
  State k1 = f(t, y);
  std::int64_t n_feval = 1;

  auto error_scale = [&cfg](const State& a, const State& b, Eigen::Index i) {
    return cfg.atol + cfg.rtol * std::max(std::abs(a[i]), std::abs(b[i]));
  };

  double h = cfg.initial_step;
  if (h <= 0.0) {
    // Error-based starter (Hairer's hinit, order 5).
    double d0 = 0.0, d1 = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double sc = cfg.atol + cfg.rtol * std::abs(y[i]);
      d0 += (y[i] / sc) * (y[i] / sc);
      d1 += (k1[i] / sc) * (k1[i] / sc);
    }
    d0 = std::sqrt(d0 / static_cast<double>(y.size()));
    d1 = std::sqrt(d1 / static_cast<double>(y.size()));
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    State y1 = y + dir * h0 * k1;
    State f1 = f(t + dir * h0, y1);
    ++n_feval;
    double d2 = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double sc = cfg.atol + cfg.rtol * std::abs(y[i]);
      const double dd = (f1[i] - k1[i]) / sc;
      d2 += dd * dd;
    }
    d2 = std::sqrt(d2 / static_cast<double>(y.size())) / h0;
    const double dmax = std::max(d1, d2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                    : std::pow(0.01 / dmax, 0.2);
    h = std::min({100.0 * h0, h1, span});
  }
  h = std::min(h, span);

  double err_old = 1e-4;
  std::int64_t steps = 0;
  bool last = false;
  while (!last) {
    if (++steps > cfg.max_steps) {
      throw MaxStepsExceeded("dopri5 exceeded max steps (" +
                             std::to_string(cfg.max_steps) + ")");
    }
    if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), 1.0)) {
      throw StepUnderflow("dopri5 step size underflow at t = " + std::to_string(t));
    }
    if (std::abs(t1 - t) <= h) {
      h = std::abs(t1 - t);
      last = true;
    }
    const double hd = dir * h;

    State k2 = f(t + c2 * hd, y + hd * (a21 * k1));
    State k3 = f(t + c3 * hd, y + hd * (a31 * k1 + a32 * k2));
    State k4 = f(t + c4 * hd, y + hd * (a41 * k1 + a42 * k2 + a43 * k3));
    State k5 = f(t + c5 * hd, y + hd * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    State k6 = f(t + hd, y + hd * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    State y_new = y + hd * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    State k7 = f(t + hd, y_new);
    n_feval += 6;

    State err_vec = hd * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double err = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double e = err_vec[i] / error_scale(y, y_new, i);
      err += e * e;
    }
    err = std::sqrt(err / static_cast<double>(y.size()));

    if (err <= 1.0) {
      t = last ? t1 : t + hd;
      y = std::move(y_new);
      k1 = std::move(k7);  // FSAL
      if (stats != nullptr) ++stats->n_accepted;
      const double err_clamped = std::max(err, 1e-16);
      double factor = kSafety * std::pow(err_clamped, -0.2 + kBeta * 0.75) *
                      std::pow(err_old, kBeta);
      factor = std::min(kMaxFactor, std::max(kMinFactor, factor));
      err_old = err_clamped;
      h *= factor;
    } else {
      if (stats != nullptr) ++stats->n_rejected;
      const double factor =
          std::max(kMinFactor, kSafety * std::pow(err, -0.2));
      h *= std::min(1.0, factor);
      last = false;
    }
  }
  if (stats != nullptr) stats->n_feval += n_feval;
  return y;
}

}  // namespace cgbg
