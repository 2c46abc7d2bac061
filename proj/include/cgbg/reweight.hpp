// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cgbg/errors.hpp"
#include "cgbg/potential.hpp"
#include "cgbg/rng.hpp"

namespace cgbg {

// Discards the top fraction of samples by log-weight (ties broken by index,
// lower index kept). cap_at_threshold instead clamps log-weights at the
// would-be cut value and keeps every sample.
struct ClipPolicy {
  double fraction = 0.01;
  bool cap_at_threshold = false;
};

struct WeightedEnsemble {
  Eigen::VectorXd R;
  Eigen::VectorXd log_q;
  Eigen::VectorXd energy;
  Eigen::VectorXd log_w;
  std::vector<std::uint8_t> keep;  // clipping survivors
  Eigen::VectorXd weights;         // normalized over survivors; zero elsewhere
  double ess_abs = 0.0;
  double ess_norm = 0.0;           // ess_abs / survivor count
  Eigen::Index n_survivors = 0;
};

// Elementwise -beta E - log q. Throws NonFiniteInput naming the first bad index.
Eigen::VectorXd log_weights(const Eigen::VectorXd& energies, const Eigen::VectorXd& log_q,
                            const ThermoState& thermo);

// Keep-mask discarding exactly floor(fraction * B) largest log-weights.
std::vector<std::uint8_t> clip(const Eigen::VectorXd& log_w, const ClipPolicy& policy);

// Log-sum-exp stabilized; survivors sum to 1, clipped entries are zero.
Eigen::VectorXd normalize(const Eigen::VectorXd& log_w,
                          const std::vector<std::uint8_t>& keep);

// Kish effective sample size of a normalized weight vector: 1 / sum w^2,
// and that divided by the vector length.
std::pair<double, double> ess(const Eigen::VectorXd& weights);

using Observable = std::function<double(double)>;

// Self-normalized estimate sum_i w_i O(R_i) over survivors.
double expectation(const WeightedEnsemble& ens, const Observable& obs);

// Resamples survivors with replacement; returns replicate mean and std.
std::pair<double, double> bootstrap(const WeightedEnsemble& ens, const Observable& obs,
                                    int n_boot, std::uint64_t seed);
// Seam for degenerate-replicate tests: stream_for(b) supplies each
// replicate's RNG.
std::pair<double, double> bootstrap_with_streams(const WeightedEnsemble& ens,
                                                 const Observable& obs, int n_boot,
                                                 const std::function<Rng(int)>& stream_for);

// Full pipeline: log-weights, clipping, normalization, ESS.
WeightedEnsemble make_ensemble(const Eigen::VectorXd& R, const Eigen::VectorXd& log_q,
                               const Eigen::VectorXd& energy, const ThermoState& thermo,
                               const ClipPolicy& policy);

// "CGBG-ENS1": header + (R, log_q, energy, log_w, keep, weight) records.
void save_ensemble(const WeightedEnsemble& ens, const std::filesystem::path& path);
WeightedEnsemble load_ensemble(const std::filesystem::path& path);
void export_ensemble_csv(const WeightedEnsemble& ens, const std::filesystem::path& path);

}  // namespace cgbg
