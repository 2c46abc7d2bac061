// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#include "cgbg/nn/optim.hpp"

namespace cgbg::nn {

void optimizer_step(OptimizerState& state, Eigen::VectorXd& params,
                    const Eigen::VectorXd& grads, const LRSchedule& schedule) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ShapeMismatch("optimizer parameter/gradient size mismatch");
  }
  const OptimizerConfig& c = state.config;
  const double lr = schedule.at(state.step);
  state.step += 1;
  const auto t = static_cast<double>(state.step);
  state.m = c.beta1 * state.m + (1.0 - c.beta1) * grads;
  state.v = (c.beta2 * state.v.array() + (1.0 - c.beta2) * grads.array().square()).matrix();
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  const Eigen::ArrayXd mhat = state.m.array() / bc1;
  const Eigen::ArrayXd vhat = state.v.array() / bc2;
  params.array() -= lr * mhat / (vhat.sqrt() + c.eps);
  if (c.kind == OptKind::AdamW && c.weight_decay != 0.0) {
    params.array() -= lr * c.weight_decay * params.array();
  }
}

Eigen::VectorXd clip_global_norm(const Eigen::VectorXd& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw Error("max_norm must be > 0");
  const double norm = grads.norm();
  if (norm <= max_norm) return grads;
  return grads * (max_norm / norm);
}

}  // namespace cgbg::nn
