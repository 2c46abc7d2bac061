// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "cgbg/cgdata.hpp"
#include "cgbg/nn/checkpoint.hpp"
#include "cgbg/nn/network.hpp"
#include "cgbg/nn/optim.hpp"

namespace cgbg {

// Scalar energy network U(R): trainable-center RBF features followed by an
// MLP. The optional input gauge maps raw CG coordinates into the network's
// native (training) coordinates.
struct PMFModel {
  nn::RBFLayerSpec rbf;
  nn::MLPSpec mlp;
  nn::ParamVector params;
  std::optional<Standardizer> input_gauge;
};

struct FMTrainConfig {
  int batch_size = 128;
  int epochs = 500;
  double learning_rate = 1e-4;
  nn::OptimizerConfig optimizer{};  // Adam(0.9, 0.999, 1e-8)
  double grad_clip = 1.0;           // global norm; 0 disables
  double split_ratio = 0.9;
  std::uint64_t seed = 0;
  nn::RBFLayerSpec rbf{};           // K = 100, width 5, centers uniform in [10, 50]
  std::vector<int> hidden{128, 128, 128, 128};
  nn::Act activation = nn::Act::Softplus;
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  int best_epoch = -1;
  double best_val_loss = 0.0;
};

PMFModel make_pmf_model(const nn::RBFLayerSpec& rbf, const std::vector<int>& hidden,
                        nn::Act activation, std::uint64_t seed);

// Energy in raw coordinates (input gauge applied when present). Energies are
// defined up to an additive constant; reported tables are min-aligned
// downstream, never here.
double pmf_energy(const PMFModel& m, double R);
Eigen::VectorXd pmf_energy(const PMFModel& m, const Eigen::VectorXd& R);

// Mean force -dU/dR in raw coordinates.
double pmf_mean_force(const PMFModel& m, double R);
Eigen::VectorXd pmf_mean_force(const PMFModel& m, const Eigen::VectorXd& R);

// Mean over the batch of (dU/dR + F_proj)^2, evaluated in the network's
// native coordinates (samples must already live there). The same formula
// serves biased datasets; only the sampling distribution differs.
double fm_loss(const PMFModel& m, const std::vector<CGSample>& batch);
double fm_loss_grad(const PMFModel& m, const std::vector<CGSample>& batch,
                    Eigen::VectorXd& grad);

// Minibatch optimization of fm_loss with a 90/10 split; returns parameters at
// the minimum validation loss (earliest epoch on ties).
std::pair<PMFModel, TrainHistory> train_pmf(const CGDataset& ds, const FMTrainConfig& cfg);

void save_history_csv(const TrainHistory& history, const std::filesystem::path& path);

void save_pmf_checkpoint(const PMFModel& m, const std::filesystem::path& path);
PMFModel load_pmf_checkpoint(const std::filesystem::path& path);

// CLI-facing table (R, U min-aligned over the grid, mean force).
void export_pmf_table_csv(const PMFModel& m, const Eigen::VectorXd& grid,
                          const std::filesystem::path& path);

}  // namespace cgbg
