// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cgbg/cnf.hpp"
#include "cgbg/langevin.hpp"
#include "cgbg/pmf.hpp"
#include "cgbg/potential.hpp"
#include "cgbg/reweight.hpp"

namespace cgbg::cli {

// Full experiment configuration; defaults mirror the MB appendix settings.
struct ExperimentConfig {
  ThermoState thermo{1.0};
  MBParams potential = MBParams::defaults();
  LangevinParams langevin{};
  TrajectoryConfig trajectory{};
  bool bias_enabled = false;
  UmbrellaBias bias{};
  CGMapping cg_mapping{};
  bool standardize_pmf = false;
  bool standardize_flow = true;
  FMTrainConfig pmf_train{};
  FlowTrainConfig flow_train{};
  ODESolverConfig solver{};
  int n_samples = 50000;
  std::uint64_t sample_seed = 3;
  double clip_fraction = 0.01;
  bool clip_cap = false;
  std::string reweight_target = "pmf";  // "pmf" | "exact"
  int metric_bins = 60;
  std::array<double, 2> metric_range{5.0, 55.0};
  double density_floor = 1e-3;
  std::array<double, 2> y_range{-20.0, 80.0};
  int n_quad = 2048;
  int n_boot = 50;
  std::uint64_t boot_seed = 4;
  std::string out_dir = "runs/mb";
};

nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);
// Parses with line:column diagnostics and rejects unknown keys.
ExperimentConfig load_config_file(const std::string& path);

// Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O error.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace cgbg::cli
