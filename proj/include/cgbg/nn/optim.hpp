// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "cgbg/errors.hpp"

namespace cgbg::nn {

enum class OptKind { Adam, AdamW };

struct OptimizerConfig {
  OptKind kind = OptKind::Adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled; used by AdamW only
};

struct LRSchedule {
  enum class Kind { Constant, Cosine };
  Kind kind = Kind::Constant;
  double start = 1e-4;
  double end = 1e-4;
  std::int64_t total_steps = 1;

  static LRSchedule constant(double lr) { return {Kind::Constant, lr, lr, 1}; }

  static LRSchedule cosine(double start, double end, std::int64_t total_steps) {
    return {Kind::Cosine, start, end, total_steps < 1 ? 1 : total_steps};
  }

  double at(std::int64_t step) const {
    if (kind == Kind::Constant) return start;
    const double s = static_cast<double>(step < 0 ? 0 : step);
    const double frac = std::min(1.0, s / static_cast<double>(total_steps));
    return end + 0.5 * (start - end) * (1.0 + std::cos(M_PI * frac));
  }
};

struct OptimizerState {
  OptimizerConfig config;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t step = 0;
};

inline OptimizerState make_optimizer(const OptimizerConfig& config, Eigen::Index n) {
  return {config, Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), 0};
}

// Bias-corrected Adam update; AdamW adds decoupled weight decay. The learning
// rate comes from the schedule at the state's current step count.
void optimizer_step(OptimizerState& state, Eigen::VectorXd& params,
                    const Eigen::VectorXd& grads, const LRSchedule& schedule);

// Rescales to max_norm when the global L2 norm exceeds it.
Eigen::VectorXd clip_global_norm(const Eigen::VectorXd& grads, double max_norm);

}  // namespace cgbg::nn
