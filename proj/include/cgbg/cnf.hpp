// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "cgbg/cgdata.hpp"
#include "cgbg/nn/checkpoint.hpp"
#include "cgbg/nn/network.hpp"
#include "cgbg/nn/optim.hpp"
#include "cgbg/ode.hpp"
#include "cgbg/rng.hpp"

namespace cgbg {

// Time-conditioned vector field over the standardized CG coordinate. The
// prior is a standard normal in standardized coordinates; the standardizer
// log-determinant is folded into reported log-densities so q integrates to 1
// in raw coordinates.
struct FlowModel {
  nn::MLPSpec mlp;  // input = 1 + embed.dim
  nn::TimeEmbeddingSpec embed;
  nn::ParamVector params;
  Standardizer standardizer;
};

struct FlowTrainConfig {
  int batch_size = 256;
  int epochs = 2000;
  double lr_start = 3e-4;
  double lr_end = 1e-5;
  nn::OptimizerConfig optimizer{nn::OptKind::AdamW, 0.9, 0.999, 1e-8, 1e-5};
  double grad_clip = 0.0;  // off by default
  std::uint64_t seed = 0;
  std::vector<int> hidden{96, 96, 96};
  nn::Act activation = nn::Act::Gelu;
  nn::TimeEmbeddingSpec embed{};
};

FlowModel make_flow_model(const std::vector<int>& hidden, nn::Act activation,
                          const nn::TimeEmbeddingSpec& embed, std::uint64_t seed);

// v_theta(t, x) in standardized coordinates.
double vector_field(const FlowModel& m, double t, double x);
Eigen::VectorXd vector_field(const FlowModel& m, double t, const Eigen::VectorXd& x);

// (v, dv/dx); the divergence is the exact input derivative, no estimators.
std::pair<double, double> vector_field_and_div(const FlowModel& m, double t, double x);

// Per-sample conditioning draws for the linear interpolation path.
struct CFMDraws {
  Eigen::VectorXd x0;  // prior samples
  Eigen::VectorXd t;   // uniform times
};

CFMDraws draw_cfm(Eigen::Index batch, Rng& rng);

// Squared regression error of v_theta(t, x_t) against x1 - x0 along
// x_t = (1 - t) x0 + t x1, averaged over the batch.
double cfm_loss_paired(const FlowModel& m, const Eigen::VectorXd& x1, const CFMDraws& draws);
double cfm_loss_paired_grad(const FlowModel& m, const Eigen::VectorXd& x1,
                            const CFMDraws& draws, Eigen::VectorXd& grad);
double cfm_loss(const FlowModel& m, const Eigen::VectorXd& x1, Rng& rng);

// AdamW with a cosine schedule on a standardized dataset; deterministic per
// seed. Returns the model with the dataset's standardizer attached.
struct FlowTrainHistory {
  std::vector<double> train_loss;
};

std::pair<FlowModel, FlowTrainHistory> train_flow(const CGDataset& ds,
                                                  const FlowTrainConfig& cfg);

struct FlowSampleBatch {
  Eigen::VectorXd R;      // raw coordinates
  Eigen::VectorXd log_q;  // raw-coordinate log-density
  SolverStats stats;
};

inline double standard_normal_logpdf(double z) {
  return -0.5 * z * z - 0.91893853320467274178;  // - log(sqrt(2 pi))
}

// Joint (state, divergence-accumulator) transport 0 -> 1. Field needs
// value(t, x) and value_and_div(t, x). Returns (x(1), int_0^1 div dt).
template <typename Field>
std::pair<double, double> flow_transport(const Field& field, double z,
                                         const ODESolverConfig& cfg,
                                         SolverStats* stats = nullptr) {
  auto derivs = [&field](double t, const Eigen::Vector2d& y) -> Eigen::Vector2d {
    const auto [v, div] = field.value_and_div(t, y[0]);
    return {v, div};
  };
  const Eigen::Vector2d y1 =
      dopri5_integrate(derivs, Eigen::Vector2d(z, 0.0), 0.0, 1.0, cfg, stats);
  return {y1[0], y1[1]};
}

// Reverse transport 1 -> 0. Returns (x(0), int_0^1 div dt along the path).
template <typename Field>
std::pair<double, double> flow_transport_reverse(const Field& field, double x1,
                                                 const ODESolverConfig& cfg,
                                                 SolverStats* stats = nullptr) {
  auto derivs = [&field](double t, const Eigen::Vector2d& y) -> Eigen::Vector2d {
    const auto [v, div] = field.value_and_div(t, y[0]);
    return {v, div};
  };
  const Eigen::Vector2d y0 =
      dopri5_integrate(derivs, Eigen::Vector2d(x1, 0.0), 1.0, 0.0, cfg, stats);
  return {y0[0], -y0[1]};
}

// Draws z per chain from an independent substream, integrates the joint ODE,
// and reports destandardized samples with exact log-densities. Chains are
// independent; results do not depend on batching or thread count.
FlowSampleBatch sample_with_logdensity(const FlowModel& m, int n, std::uint64_t seed,
                                       const ODESolverConfig& cfg, int threads = 1);

// Reverse-time exact log-density of a raw coordinate under the flow.
double log_density_at(const FlowModel& m, double R, const ODESolverConfig& cfg,
                      SolverStats* stats = nullptr);
Eigen::VectorXd log_density_at(const FlowModel& m, const Eigen::VectorXd& R,
                               const ODESolverConfig& cfg, int threads = 1);

void save_flow_checkpoint(const FlowModel& m, const std::filesystem::path& path);
FlowModel load_flow_checkpoint(const std::filesystem::path& path);

void save_flow_history_csv(const FlowTrainHistory& history,
                           const std::filesystem::path& path);

// "CGBG-SMP1": header + (R, log_q) records.
void save_samples(const FlowSampleBatch& batch, const std::filesystem::path& path);
FlowSampleBatch load_samples(const std::filesystem::path& path);

}  // namespace cgbg
