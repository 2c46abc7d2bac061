// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#include "cgbg/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "cgbg/io.hpp"

namespace cgbg {

Eigen::VectorXd Histogram1D::centers() const {
  Eigen::VectorXd c(edges.size() - 1);
  for (Eigen::Index i = 0; i + 1 < edges.size(); ++i) {
    c[i] = 0.5 * (edges[i] + edges[i + 1]);
  }
  return c;
}

double Histogram1D::total_mass() const { return mass.sum(); }

Histogram1D Histogram1D::normalized() const {
  Histogram1D h = *this;
  const double total = mass.sum();
  if (total > 0.0) h.mass /= total;
  return h;
}

namespace {

void check_edges(const Eigen::VectorXd& edges) {
  if (edges.size() < 2) throw Error("histogram needs at least two edges");
  for (Eigen::Index i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) throw Error("histogram edges must increase");
  }
}

}  // namespace

Histogram1D weighted_histogram(const Eigen::VectorXd& samples,
                               const Eigen::VectorXd* weights,
                               const Eigen::VectorXd& edges) {
  check_edges(edges);
  if (weights != nullptr && weights->size() != samples.size()) {
    throw ShapeMismatch("weights length differs from samples");
  }
  Histogram1D h;
  h.edges = edges;
  h.mass = Eigen::VectorXd::Zero(edges.size() - 1);
  const double lo = edges[0];
  const double hi = edges[edges.size() - 1];
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    const double w = weights != nullptr ? (*weights)[i] : 1.0;
    const double x = samples[i];
    if (x < lo || x >= hi) {
      // right edge belongs to the last bin
      if (x == hi) {
        h.mass[h.mass.size() - 1] += w;
      } else {
        h.overflow += w;
      }
      continue;
    }
    // binary search for the bin
    Eigen::Index left = 0;
    Eigen::Index right = edges.size() - 1;
    while (right - left > 1) {
      const Eigen::Index mid = (left + right) / 2;
      if (x < edges[mid]) {
        right = mid;
      } else {
        left = mid;
      }
    }
    h.mass[left] += w;
  }
  return h;
}

Histogram1D histogram_from_masses(const Eigen::VectorXd& edges,
                                  const Eigen::VectorXd& mass) {
  check_edges(edges);
  if (mass.size() != edges.size() - 1) throw ShapeMismatch("mass/edges size mismatch");
  Histogram1D h;
  h.edges = edges;
  h.mass = mass;
  return h;
}

FreeEnergyProfile free_energy_profile(const Histogram1D& h, const ThermoState& thermo,
                                      double floor_fraction) {
  const Histogram1D hn = h.normalized();
  FreeEnergyProfile p;
  p.centers = hn.centers();
  p.kT = thermo.kT;
  p.F = Eigen::VectorXd::Zero(hn.mass.size());
  p.valid.assign(static_cast<std::size_t>(hn.mass.size()), 0);
  const double pmax = hn.mass.maxCoeff();
  if (pmax <= 0.0) return p;
  const double floor = floor_fraction * pmax;
  double fmin = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < hn.mass.size(); ++i) {
    if (hn.mass[i] >= floor && hn.mass[i] > 0.0) {
      p.valid[static_cast<std::size_t>(i)] = 1;
      p.F[i] = -thermo.kT * std::log(hn.mass[i]);
      fmin = std::min(fmin, p.F[i]);
    }
  }
  for (Eigen::Index i = 0; i < p.F.size(); ++i) {
    if (p.valid[static_cast<std::size_t>(i)] != 0) p.F[i] -= fmin;
  }
  return p;
}

double js_divergence(const Histogram1D& p, const Histogram1D& q) {
  if (p.edges.size() != q.edges.size() || (p.edges - q.edges).cwiseAbs().maxCoeff() != 0.0) {
    throw EdgeMismatch("JS divergence requires identical histogram edges");
  }
  const Eigen::VectorXd a = p.normalized().mass;
  const Eigen::VectorXd b = q.normalized().mass;
  double js = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double m = 0.5 * (a[i] + b[i]);
    if (a[i] > 0.0) js += 0.5 * a[i] * std::log(a[i] / m);
    if (b[i] > 0.0) js += 0.5 * b[i] * std::log(b[i] / m);
  }
  return std::max(0.0, js);
}

double gauge_alignment_constant(const FreeEnergyProfile& a, const FreeEnergyProfile& b) {
  if (a.centers.size() != b.centers.size() ||
      (a.centers - b.centers).cwiseAbs().maxCoeff() != 0.0) {
    throw EdgeMismatch("profiles must share centers");
  }
  double wsum = 0.0;
  double csum = 0.0;
  for (Eigen::Index i = 0; i < a.centers.size(); ++i) {
    const auto iu = static_cast<std::size_t>(i);
    if (a.valid[iu] == 0 || b.valid[iu] == 0) continue;
    const double w = std::exp(-b.F[i] / b.kT);  // reference-density weight
    wsum += w;
    csum += w * (a.F[i] - b.F[i]);
  }
  if (wsum <= 0.0) throw NoOverlap("no jointly valid bins");
  return csum / wsum;
}

double pmf_error(const FreeEnergyProfile& a, const FreeEnergyProfile& b) {
  const double c = gauge_alignment_constant(a, b);
  double sum = 0.0;
  Eigen::Index n = 0;
  for (Eigen::Index i = 0; i < a.centers.size(); ++i) {
    const auto iu = static_cast<std::size_t>(i);
    if (a.valid[iu] == 0 || b.valid[iu] == 0) continue;
    const double d = a.F[i] - b.F[i] - c;
    sum += d * d;
    ++n;
  }
  if (n == 0) throw NoOverlap("no jointly valid bins");
  return sum / static_cast<double>(n);
}

namespace {

// Trapezoid-normalized log-density from energies on a grid; returns log p.
Eigen::VectorXd log_density_from_energy(const Eigen::VectorXd& U, double beta,
                                        const Eigen::VectorXd& grid,
                                        bool check_boundary, const char* who) {
  Eigen::ArrayXd logp = -beta * U.array();
  const double m = logp.maxCoeff();
  logp -= m;
  if (check_boundary) {
    const double floor_log = std::log(1e-10);
    if (logp[0] > floor_log || logp[logp.size() - 1] > floor_log) {
      throw GridTooNarrow(std::string(who) +
                          ": boundary density above 1e-10 of max; widen the grid");
    }
  }
  const Eigen::VectorXd w = trapezoid_weights(grid);
  double z = 0.0;
  for (Eigen::Index i = 0; i < grid.size(); ++i) z += w[i] * std::exp(logp[i]);
  return (logp - std::log(z)).matrix();
}

}  // namespace

double kl_quadrature(const Eigen::VectorXd& U_a, const Eigen::VectorXd& U_b,
                     const ThermoState& thermo, const Eigen::VectorXd& grid,
                     bool check_boundary) {
  if (U_a.size() != grid.size() || U_b.size() != grid.size()) {
    throw ShapeMismatch("energy grids must match the quadrature grid");
  }
  const double beta = thermo.beta();
  const Eigen::VectorXd la = log_density_from_energy(U_a, beta, grid, check_boundary, "p_a");
  const Eigen::VectorXd lb = log_density_from_energy(U_b, beta, grid, check_boundary, "p_b");
  const Eigen::VectorXd w = trapezoid_weights(grid);
  double kl = 0.0;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double pa = std::exp(la[i]);
    if (pa > 0.0) kl += w[i] * pa * (la[i] - lb[i]);
  }
  return kl;
}

double fisher_quadrature(const Eigen::VectorXd& U_a, const Eigen::VectorXd& dU_a,
                         const Eigen::VectorXd& U_b, const Eigen::VectorXd& dU_b,
                         FisherBase base, const ThermoState& thermo,
                         const Eigen::VectorXd& grid, bool check_boundary) {
  if (U_a.size() != grid.size() || U_b.size() != grid.size() ||
      dU_a.size() != grid.size() || dU_b.size() != grid.size()) {
    throw ShapeMismatch("energy grids must match the quadrature grid");
  }
  const double beta = thermo.beta();
  const Eigen::VectorXd& U_base = base == FisherBase::First ? U_a : U_b;
  const Eigen::VectorXd lp =
      log_density_from_energy(U_base, beta, grid, check_boundary, "p_base");
  const Eigen::VectorXd w = trapezoid_weights(grid);
  double fisher = 0.0;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double d = dU_a[i] - dU_b[i];
    fisher += w[i] * std::exp(lp[i]) * d * d;
  }
  return beta * beta * fisher;
}

std::vector<FiberBinResult> fiber_invariance_test(const AtomisticDataset& a,
                                                  const AtomisticDataset& b,
                                                  const Eigen::VectorXd& x_edges,
                                                  const Eigen::VectorXd& y_edges,
                                                  Eigen::Index min_count) {
  check_edges(x_edges);
  check_edges(y_edges);
  const Eigen::Index n_bins = x_edges.size() - 1;
  std::vector<std::vector<double>> ys_a(static_cast<std::size_t>(n_bins));
  std::vector<std::vector<double>> ys_b(static_cast<std::size_t>(n_bins));
  auto collect = [&x_edges, n_bins](const AtomisticDataset& ds,
                                    std::vector<std::vector<double>>& bins) {
    for (const auto& rec : ds.records) {
      if (rec.x < x_edges[0] || rec.x >= x_edges[x_edges.size() - 1]) continue;
      Eigen::Index left = 0;
      Eigen::Index right = n_bins;
      while (right - left > 1) {
        const Eigen::Index mid = (left + right) / 2;
        if (rec.x < x_edges[mid]) {
          right = mid;
        } else {
          left = mid;
        }
      }
      bins[static_cast<std::size_t>(left)].push_back(rec.y);
    }
  };
  collect(a, ys_a);
  collect(b, ys_b);

  std::vector<FiberBinResult> results;
  results.reserve(static_cast<std::size_t>(n_bins));
  for (Eigen::Index i = 0; i < n_bins; ++i) {
    FiberBinResult r;
    r.x_lo = x_edges[i];
    r.x_hi = x_edges[i + 1];
    const auto& ya = ys_a[static_cast<std::size_t>(i)];
    const auto& yb = ys_b[static_cast<std::size_t>(i)];
    r.count_a = static_cast<Eigen::Index>(ya.size());
    r.count_b = static_cast<Eigen::Index>(yb.size());
    if (r.count_a >= min_count && r.count_b >= min_count) {
      const auto map_a = Eigen::Map<const Eigen::VectorXd>(ya.data(), r.count_a);
      const auto map_b = Eigen::Map<const Eigen::VectorXd>(yb.data(), r.count_b);
      const Histogram1D ha = weighted_histogram(map_a, nullptr, y_edges);
      const Histogram1D hb = weighted_histogram(map_b, nullptr, y_edges);
      r.tested = true;
      r.js = js_divergence(ha, hb);
    }
    results.push_back(r);
  }
  return results;
}

nlohmann::json MetricReport::to_json() const {
  return {{"js", js},
          {"js_std", js_std},
          {"pmf_error", pmf_error},
          {"pmf_error_std", pmf_error_std},
          {"ess_abs", ess_abs},
          {"ess_norm", ess_norm},
          {"ess_norm_over_total", ess_norm_over_total},
          {"n_samples", n_samples},
          {"n_survivors", n_survivors}};
}

MetricReport MetricReport::from_json(const nlohmann::json& j) {
  MetricReport r;
  j.at("js").get_to(r.js);
  j.at("js_std").get_to(r.js_std);
  j.at("pmf_error").get_to(r.pmf_error);
  j.at("pmf_error_std").get_to(r.pmf_error_std);
  j.at("ess_abs").get_to(r.ess_abs);
  j.at("ess_norm").get_to(r.ess_norm);
  j.at("ess_norm_over_total").get_to(r.ess_norm_over_total);
  j.at("n_samples").get_to(r.n_samples);
  j.at("n_survivors").get_to(r.n_survivors);
  return r;
}

void save_histogram_csv(const Histogram1D& h, const std::filesystem::path& path) {
  std::ostringstream out;
  out.precision(17);
  out << "center,mass\n";
  const Eigen::VectorXd c = h.centers();
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    out << c[i] << "," << h.mass[i] << "\n";
  }
  io::write_text_file(path, out.str());
}

void save_profile_csv(const FreeEnergyProfile& p, const std::filesystem::path& path) {
  std::ostringstream out;
  out.precision(17);
  out << "center,F,valid\n";
  for (Eigen::Index i = 0; i < p.centers.size(); ++i) {
    out << p.centers[i] << "," << p.F[i] << ","
        << int(p.valid[static_cast<std::size_t>(i)]) << "\n";
  }
  io::write_text_file(path, out.str());
}

namespace {

std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void svg_line_plot(const std::filesystem::path& path, const std::string& title,
                   const std::string& x_label, const std::string& y_label,
                   const std::vector<PlotSeries>& series) {
  const double width = 720, height = 480;
  const double ml = 70, mr = 160, mt = 40, mb = 50;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (Eigen::Index i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (!std::isfinite(xmin) || xmax <= xmin) { xmin = 0; xmax = 1; }
  if (!std::isfinite(ymin) || ymax <= ymin) { ymin = 0; ymax = 1; }
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr); };
  auto py = [&](double y) { return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb); };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                 "#ff7f0e", "#8c564b", "#17becf"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
      << svg_escape(title) << "</text>\n";
  // axes
  svg << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr
      << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
      << height - mb << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double fx = xmin + (xmax - xmin) * k / 5.0;
    const double fy = ymin + (ymax - ymin) * k / 5.0;
    svg << "<text x=\"" << px(fx) << "\" y=\"" << height - mb + 18
        << "\" text-anchor=\"middle\" font-size=\"11\">" << std::setprecision(4) << fx
        << "</text>\n";
    svg << "<text x=\"" << ml - 8 << "\" y=\"" << py(fy) + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << std::setprecision(4) << fy
        << "</text>\n";
  }
  svg << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-size=\"13\">" << svg_escape(x_label)
      << "</text>\n";
  svg << "<text x=\"18\" y=\"" << (mt + height - mb) / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
      << (mt + height - mb) / 2 << ")\">" << svg_escape(y_label) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = colors[s % 7];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (Eigen::Index i = 0; i < series[s].x.size(); ++i) {
      if (!std::isfinite(series[s].x[i]) || !std::isfinite(series[s].y[i])) continue;
      svg << px(series[s].x[i]) << "," << py(series[s].y[i]) << " ";
    }
    svg << "\"/>\n";
    const double ly = mt + 18.0 * static_cast<double>(s);
    svg << "<line x1=\"" << width - mr + 10 << "\" y1=\"" << ly << "\" x2=\""
        << width - mr + 34 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << width - mr + 40 << "\" y=\"" << ly + 4
        << "\" font-size=\"12\">" << svg_escape(series[s].label) << "</text>\n";
  }
  svg << "</svg>\n";
  io::write_text_file(path, svg.str());
}

}  // namespace cgbg
