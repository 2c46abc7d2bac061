// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "cgbg/errors.hpp"
#include "cgbg/langevin.hpp"
#include "cgbg/potential.hpp"

namespace cgbg {

struct Histogram1D {
  Eigen::VectorXd edges;  // increasing, size n+1
  Eigen::VectorXd mass;   // size n, weighted counts
  double overflow = 0.0;  // weight that fell outside the edges

  Eigen::VectorXd centers() const;
  double total_mass() const;
  Histogram1D normalized() const;
};

Histogram1D weighted_histogram(const Eigen::VectorXd& samples,
                               const Eigen::VectorXd* weights,
                               const Eigen::VectorXd& edges);

// Histogram with the given per-bin masses (oracle densities, file round trips).
Histogram1D histogram_from_masses(const Eigen::VectorXd& edges,
                                  const Eigen::VectorXd& mass);

struct FreeEnergyProfile {
  Eigen::VectorXd centers;
  Eigen::VectorXd F;                // kT units, min-aligned over valid bins
  std::vector<std::uint8_t> valid;  // bins at or above the density floor
  double kT = 1.0;
};

// F_i = -kT ln p_i on bins with p_i >= floor * max(p); min-aligned; the rest
// masked out.
FreeEnergyProfile free_energy_profile(const Histogram1D& h, const ThermoState& thermo,
                                      double floor_fraction = 1e-3);

// Jensen-Shannon divergence in nats between two normalized histograms on
// identical edges.
double js_divergence(const Histogram1D& p, const Histogram1D& q);

// Mean squared aligned difference over jointly valid bins; the alignment
// constant is the reference-density-weighted mean of (F_a - F_b), reference
// densities taken from profile b.
double pmf_error(const FreeEnergyProfile& a, const FreeEnergyProfile& b);

// Weighted-mean alignment constant c minimizing the weighted square of
// (F_a - F_b - c) over jointly valid bins; exposed for max-deviation reports.
double gauge_alignment_constant(const FreeEnergyProfile& a, const FreeEnergyProfile& b);

// KL(p_a || p_b) in nats with p ~ exp(-beta U), both trapezoid-normalized on
// the grid. check_boundary enforces that both densities decay below 1e-10 of
// their maxima at the grid ends (full-support quadrature); disable it only
// for deliberately truncated diagnostics on a convex window.
double kl_quadrature(const Eigen::VectorXd& U_a, const Eigen::VectorXd& U_b,
                     const ThermoState& thermo, const Eigen::VectorXd& grid,
                     bool check_boundary = true);

enum class FisherBase { First, Second };

// beta^2 * E_base[(dU_a - dU_b)^2]; the KL bound of the LSI diagnostic is
// this value divided by 2 rho.
double fisher_quadrature(const Eigen::VectorXd& U_a, const Eigen::VectorXd& dU_a,
                         const Eigen::VectorXd& U_b, const Eigen::VectorXd& dU_b,
                         FisherBase base, const ThermoState& thermo,
                         const Eigen::VectorXd& grid, bool check_boundary = true);

struct FiberBinResult {
  double x_lo = 0.0;
  double x_hi = 0.0;
  Eigen::Index count_a = 0;
  Eigen::Index count_b = 0;
  bool tested = false;  // both counts >= min_count
  double js = 0.0;
};

// Per-x-bin JS between conditional y-histograms of two datasets on the same
// potential; bins below min_count in either dataset are reported untested.
std::vector<FiberBinResult> fiber_invariance_test(const AtomisticDataset& a,
                                                  const AtomisticDataset& b,
                                                  const Eigen::VectorXd& x_edges,
                                                  const Eigen::VectorXd& y_edges,
                                                  Eigen::Index min_count);

struct MetricReport {
  double js = 0.0;
  double js_std = 0.0;
  double pmf_error = 0.0;
  double pmf_error_std = 0.0;
  double ess_abs = 0.0;
  double ess_norm = 0.0;             // over survivors
  double ess_norm_over_total = 0.0;  // over the pre-clip sample count
  Eigen::Index n_samples = 0;
  Eigen::Index n_survivors = 0;

  nlohmann::json to_json() const;
  static MetricReport from_json(const nlohmann::json& j);
};

void save_histogram_csv(const Histogram1D& h, const std::filesystem::path& path);
void save_profile_csv(const FreeEnergyProfile& p, const std::filesystem::path& path);

// Minimal SVG polyline chart; series share the x axis.
struct PlotSeries {
  std::string label;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

void svg_line_plot(const std::filesystem::path& path, const std::string& title,
                   const std::string& x_label, const std::string& y_label,
                   const std::vector<PlotSeries>& series);

}  // namespace cgbg
