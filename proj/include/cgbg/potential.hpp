// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <string>

#include <Eigen/Dense>

#include "cgbg/errors.hpp"

namespace cgbg {

using Point2 = Eigen::Vector2d;

struct ThermoState {
  double kT = 1.0;
  double beta() const { return 1.0 / kT; }
};

// One Gaussian term A * exp[a (x-x0)^2 + b (x-x0)(y-y0) + c (y-y0)^2].
struct GaussianTerm {
  double amplitude = 0.0;
  double x0 = 0.0;
  double y0 = 0.0;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

// Four-term Mueller-Brown family. The generic parameterization also covers
// separable diagnostic potentials (terms that depend on one coordinate only).
struct MBParams {
  std::array<GaussianTerm, 4> terms{};

  static MBParams defaults() {
    MBParams p;
    p.terms[0] = {-17.3, 48.0, 8.0, -0.0039, 0.0, -0.0391};
    p.terms[1] = {-8.7, 32.0, 16.0, -0.0039, 0.0, -0.0391};
    p.terms[2] = {-14.7, 24.0, 32.0, -0.0254, 0.043, -0.0254};
    p.terms[3] = {1.3, 16.0, 24.0, 0.00273, 0.0023, 0.00273};
    return p;
  }
};

template <typename Scalar>
Scalar mb_energy_at(Scalar x, Scalar y, const MBParams& params) {
  Scalar u = Scalar(0);
  for (const auto& t : params.terms) {
    const Scalar dx = x - Scalar(t.x0);
    const Scalar dy = y - Scalar(t.y0);
    u += Scalar(t.amplitude) *
         std::exp(Scalar(t.a) * dx * dx + Scalar(t.b) * dx * dy + Scalar(t.c) * dy * dy);
  }
  return u;
}

double mb_energy(const Point2& p, const MBParams& params = MBParams::defaults());

// Negative analytic gradient of the four-term sum.
Eigen::Vector2d mb_force(const Point2& p, const MBParams& params = MBParams::defaults());

// Gaussian well along the CG coordinate: A * exp[-(R - x0)^2 / (2 w^2)].
// The signature accepts the CG coordinate only, so the bias cannot depend on
// the eliminated coordinate.
struct UmbrellaBias {
  double amplitude = -4.0;
  double center = 32.0;
  double width = 5.0;
};

double bias_energy(const UmbrellaBias& b, double R);
double bias_force(const UmbrellaBias& b, double R);  // -d/dR of bias_energy

// 1D marginal free energy on a grid, min-aligned so min over grid == 0.
struct ReferencePMF {
  Eigen::VectorXd grid;
  Eigen::VectorXd values;
  double kT = 1.0;
  std::array<double, 2> y_range{-20.0, 80.0};
  int n_quad = 2048;
};

// Gauss-Legendre nodes/weights on [lo, hi]; cached per node count.
void gauss_legendre(int n, double lo, double hi, Eigen::VectorXd& nodes,
                    Eigen::VectorXd& weights);

namespace detail {

// log of the y-integral of exp(-beta u(x, .)) over y_range by Gauss-Legendre
// quadrature, evaluated in log space. When check_boundary is set, throws
// BoundaryNotConverged unless the integrand at both interval ends is below
// 1e-12 of its maximum over the nodes.
template <typename PotentialFn>
double log_marginal_weight(const ThermoState& thermo, double x,
                           const Eigen::VectorXd& y_nodes,
                           const Eigen::VectorXd& y_weights,
                           std::array<double, 2> y_range, PotentialFn&& u,
                           bool check_boundary) {
  const double beta = thermo.beta();
  const Eigen::Index n = y_nodes.size();
  Eigen::VectorXd logf(n);
  for (Eigen::Index j = 0; j < n; ++j) logf[j] = -beta * u(x, y_nodes[j]);
  const double m = logf.maxCoeff();
  if (check_boundary) {
    const double lo = -beta * u(x, y_range[0]);
    const double hi = -beta * u(x, y_range[1]);
    const double floor_log = m + std::log(1e-12);
    if (lo > floor_log || hi > floor_log) {
      throw BoundaryNotConverged(
          "marginal integrand not negligible at y_range boundary (x = " +
          std::to_string(x) + "); widen y_range");
    }
  }
  double s = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) s += y_weights[j] * std::exp(logf[j] - m);
  return m + std::log(s);
}

}  // namespace detail

// U(x_i) = -kT ln \int exp(-beta u(x_i, y)) dy, min-aligned over the grid.
template <typename PotentialFn>
ReferencePMF exact_marginal_pmf_of(const ThermoState& thermo,
                                   const Eigen::VectorXd& grid,
                                   std::array<double, 2> y_range, int n_quad,
                                   PotentialFn&& u) {
  if (grid.size() < 1) throw Error("empty PMF grid");
  for (Eigen::Index i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw Error("PMF grid must be strictly increasing");
  }
  Eigen::VectorXd nodes, weights;
  gauss_legendre(n_quad, y_range[0], y_range[1], nodes, weights);
  ReferencePMF ref;
  ref.grid = grid;
  ref.values.resize(grid.size());
  ref.kT = thermo.kT;
  ref.y_range = y_range;
  ref.n_quad = n_quad;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    ref.values[i] = -thermo.kT * detail::log_marginal_weight(thermo, grid[i], nodes,
                                                             weights, y_range, u, true);
  }
  ref.values.array() -= ref.values.minCoeff();
  return ref;
}

ReferencePMF exact_marginal_pmf(const ThermoState& thermo, const Eigen::VectorXd& grid,
                                std::array<double, 2> y_range = {-20.0, 80.0},
                                int n_quad = 2048,
                                const MBParams& params = MBParams::defaults());

// Boltzmann density e^{-beta U} on the PMF grid, trapezoid-normalized.
Eigen::VectorXd reference_density(const ReferencePMF& ref);

// Trapezoid quadrature weights for a strictly increasing grid.
Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& grid);

// Exact marginal bin masses of the (optionally biased) Boltzmann density,
// normalized to sum 1; the histogram-space oracle for sampled data.
Eigen::VectorXd boltzmann_x_bin_masses(const ThermoState& thermo,
                                       const Eigen::VectorXd& edges,
                                       const MBParams& params = MBParams::defaults(),
                                       const UmbrellaBias* bias = nullptr,
                                       std::array<double, 2> y_range = {-20.0, 80.0},
                                       int n_quad_y = 512, int n_quad_x_per_bin = 16);

// Marginal PMF value at one coordinate (same quadrature, no gauge).
double exact_pmf_at(const ThermoState& thermo, double x,
                    std::array<double, 2> y_range = {-20.0, 80.0}, int n_quad = 2048,
                    const MBParams& params = MBParams::defaults(),
                    const UmbrellaBias* bias = nullptr);

// Two-column CSV (grid,value) plus a JSON sidecar at path + ".meta.json"
// recording kT, y_range, n_quad, and the gauge convention.
void save_reference_pmf(const ReferencePMF& ref, const std::filesystem::path& csv_path);
ReferencePMF load_reference_pmf(const std::filesystem::path& csv_path);

}  // namespace cgbg
