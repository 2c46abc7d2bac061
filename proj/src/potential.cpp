// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#include "cgbg/potential.hpp"

#include <map>
#include <mutex>
#include <sstream>

#include "cgbg/io.hpp"

namespace cgbg {

double mb_energy(const Point2& p, const MBParams& params) {
  return mb_energy_at<double>(p.x(), p.y(), params);
}

Eigen::Vector2d mb_force(const Point2& p, const MBParams& params) {
  double gx = 0.0;
  double gy = 0.0;
  for (const auto& t : params.terms) {
    const double dx = p.x() - t.x0;
    const double dy = p.y() - t.y0;
    const double e = t.amplitude * std::exp(t.a * dx * dx + t.b * dx * dy + t.c * dy * dy);
    gx += e * (2.0 * t.a * dx + t.b * dy);
    gy += e * (t.b * dx + 2.0 * t.c * dy);
  }
  return {-gx, -gy};
}

double bias_energy(const UmbrellaBias& b, double R) {
  const double d = R - b.center;
  return b.amplitude * std::exp(-d * d / (2.0 * b.width * b.width));
}

double bias_force(const UmbrellaBias& b, double R) {
  const double d = R - b.center;
  return bias_energy(b, R) * d / (b.width * b.width);
}

namespace {

struct GLRule {
  Eigen::VectorXd nodes;   // on [-1, 1]
  Eigen::VectorXd weights;
};

// Newton iteration on Legendre polynomials.
GLRule compute_gauss_legendre(int n) {
  GLRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

const GLRule& cached_rule(int n) {
  static std::mutex mu;
  static std::map<int, GLRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
  return it->second;
}

}  // namespace

void gauss_legendre(int n, double lo, double hi, Eigen::VectorXd& nodes,
                    Eigen::VectorXd& weights) {
  if (n < 1) throw Error("quadrature node count must be >= 1");
  const GLRule& rule = cached_rule(n);
  const double mid = 0.5 * (lo + hi);
  const double halfw = 0.5 * (hi - lo);
  nodes = (rule.nodes.array() * halfw + mid).matrix();
  weights = rule.weights * halfw;
}

ReferencePMF exact_marginal_pmf(const ThermoState& thermo, const Eigen::VectorXd& grid,
                                std::array<double, 2> y_range, int n_quad,
                                const MBParams& params) {
  return exact_marginal_pmf_of(
      thermo, grid, y_range, n_quad,
      [&params](double x, double y) { return mb_energy_at<double>(x, y, params); });
}

Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& grid) {
  const Eigen::Index n = grid.size();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  if (n == 1) {
    w[0] = 1.0;
    return w;
  }
  w[0] = 0.5 * (grid[1] - grid[0]);
  w[n - 1] = 0.5 * (grid[n - 1] - grid[n - 2]);
  for (Eigen::Index i = 1; i + 1 < n; ++i) w[i] = 0.5 * (grid[i + 1] - grid[i - 1]);
  return w;
}

Eigen::VectorXd reference_density(const ReferencePMF& ref) {
  const double beta = 1.0 / ref.kT;
  Eigen::ArrayXd logp = -beta * ref.values.array();
  logp -= logp.maxCoeff();
  Eigen::VectorXd p = logp.exp().matrix();
  const Eigen::VectorXd w = trapezoid_weights(ref.grid);
  p /= p.dot(w);
  return p;
}

Eigen::VectorXd boltzmann_x_bin_masses(const ThermoState& thermo,
                                       const Eigen::VectorXd& edges,
                                       const MBParams& params, const UmbrellaBias* bias,
                                       std::array<double, 2> y_range, int n_quad_y,
                                       int n_quad_x_per_bin) {
  const Eigen::Index n_bins = edges.size() - 1;
  if (n_bins < 1) throw Error("need at least one bin");
  Eigen::VectorXd y_nodes, y_weights;
  gauss_legendre(n_quad_y, y_range[0], y_range[1], y_nodes, y_weights);
  auto u = [&params](double x, double y) { return mb_energy_at<double>(x, y, params); };

  // Per x-node log of the y-marginal weight, plus the bias at that x.
  std::vector<double> log_node(static_cast<std::size_t>(n_bins * n_quad_x_per_bin));
  std::vector<double> node_w(log_node.size());
  Eigen::Index idx = 0;
  for (Eigen::Index b = 0; b < n_bins; ++b) {
    Eigen::VectorXd x_nodes, x_weights;
    gauss_legendre(n_quad_x_per_bin, edges[b], edges[b + 1], x_nodes, x_weights);
    for (int j = 0; j < n_quad_x_per_bin; ++j, ++idx) {
      double lw = detail::log_marginal_weight(thermo, x_nodes[j], y_nodes, y_weights,
                                              y_range, u, false);
      if (bias != nullptr) lw += -thermo.beta() * bias_energy(*bias, x_nodes[j]);
      log_node[static_cast<std::size_t>(idx)] = lw;
      node_w[static_cast<std::size_t>(idx)] = x_weights[j];
    }
  }
  const double m = *std::max_element(log_node.begin(), log_node.end());
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(n_bins);
  idx = 0;
  for (Eigen::Index b = 0; b < n_bins; ++b) {
    double s = 0.0;
    for (int j = 0; j < n_quad_x_per_bin; ++j, ++idx) {
      s += node_w[static_cast<std::size_t>(idx)] *
           std::exp(log_node[static_cast<std::size_t>(idx)] - m);
    }
    mass[b] = s;
  }
  mass /= mass.sum();
  return mass;
}

double exact_pmf_at(const ThermoState& thermo, double x, std::array<double, 2> y_range,
                    int n_quad, const MBParams& params, const UmbrellaBias* bias) {
  Eigen::VectorXd nodes, weights;
  gauss_legendre(n_quad, y_range[0], y_range[1], nodes, weights);
  auto u = [&params](double xx, double yy) { return mb_energy_at<double>(xx, yy, params); };
  double value =
      -thermo.kT * detail::log_marginal_weight(thermo, x, nodes, weights, y_range, u, false);
  if (bias != nullptr) value += bias_energy(*bias, x);
  return value;
}

void save_reference_pmf(const ReferencePMF& ref, const std::filesystem::path& csv_path) {
  std::ostringstream csv;
  csv.precision(17);
  csv << "grid,value\n";
  for (Eigen::Index i = 0; i < ref.grid.size(); ++i) {
    csv << ref.grid[i] << "," << ref.values[i] << "\n";
  }
  io::write_text_file(csv_path, csv.str());
  io::json meta;
  meta["kT"] = ref.kT;
  meta["y_range"] = {ref.y_range[0], ref.y_range[1]};
  meta["n_quad"] = ref.n_quad;
  meta["gauge"] = "min_aligned";
  io::write_text_file(csv_path.string() + ".meta.json", meta.dump(2) + "\n");
}

ReferencePMF load_reference_pmf(const std::filesystem::path& csv_path) {
  const std::string text = io::read_text_file(csv_path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("grid,", 0) != 0) {
    throw FormatError("reference PMF CSV missing header: " + csv_path.string());
  }
  std::vector<double> grid, values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError("bad CSV row: " + line);
    grid.push_back(std::stod(line.substr(0, comma)));
    values.push_back(std::stod(line.substr(comma + 1)));
  }
  ReferencePMF ref;
  ref.grid = Eigen::Map<const Eigen::VectorXd>(grid.data(),
                                               static_cast<Eigen::Index>(grid.size()));
  ref.values = Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                 static_cast<Eigen::Index>(values.size()));
  const auto meta = io::json::parse(io::read_text_file(csv_path.string() + ".meta.json"));
  ref.kT = meta.at("kT").get<double>();
  ref.y_range = {meta.at("y_range")[0].get<double>(), meta.at("y_range")[1].get<double>()};
  ref.n_quad = meta.at("n_quad").get<int>();
  return ref;
}

}  // namespace cgbg
