// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#include "cgbg/reweight.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cgbg/io.hpp"

namespace cgbg {

namespace {
constexpr const char* kEnsembleMagic = "CGBG-ENS1";
}

Eigen::VectorXd log_weights(const Eigen::VectorXd& energies, const Eigen::VectorXd& log_q,
                            const ThermoState& thermo) {
  if (energies.size() != log_q.size()) {
    throw ShapeMismatch("energies and log_q must have equal length");
  }
  const double beta = thermo.beta();
  Eigen::VectorXd log_w(energies.size());
  for (Eigen::Index i = 0; i < energies.size(); ++i) {
    if (!std::isfinite(energies[i]) || !std::isfinite(log_q[i])) {
      throw NonFiniteInput("non-finite energy or log_q at index " + std::to_string(i));
    }
    log_w[i] = -beta * energies[i] - log_q[i];
  }
  return log_w;
}

namespace {

// Indices ordered by descending log-weight; equal values ordered by
// descending index so the lower index survives clipping.
std::vector<Eigen::Index> descending_order(const Eigen::VectorXd& log_w) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(log_w.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&log_w](Eigen::Index a, Eigen::Index b) {
    if (log_w[a] != log_w[b]) return log_w[a] > log_w[b];
    return a > b;
  });
  return order;
}

}  // namespace

std::vector<std::uint8_t> clip(const Eigen::VectorXd& log_w, const ClipPolicy& policy) {
  if (!(policy.fraction >= 0.0 && policy.fraction < 0.5)) {
    throw Error("clip fraction must be in [0, 0.5)");
  }
  const Eigen::Index n = log_w.size();
  std::vector<std::uint8_t> keep(static_cast<std::size_t>(n), 1);
  const auto n_discard =
      static_cast<Eigen::Index>(std::floor(policy.fraction * static_cast<double>(n)));
  if (n_discard == 0) return keep;
  const auto order = descending_order(log_w);
  for (Eigen::Index i = 0; i < n_discard; ++i) {
    keep[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 0;
  }
  return keep;
}

Eigen::VectorXd normalize(const Eigen::VectorXd& log_w,
                          const std::vector<std::uint8_t>& keep) {
  if (static_cast<Eigen::Index>(keep.size()) != log_w.size()) {
    throw ShapeMismatch("keep mask length mismatch");
  }
  double max_kept = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < log_w.size(); ++i) {
    if (keep[static_cast<std::size_t>(i)] != 0) max_kept = std::max(max_kept, log_w[i]);
  }
  if (!std::isfinite(max_kept)) throw AllClipped("no surviving samples to normalize");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(log_w.size());
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(log_w.size()));
  for (Eigen::Index i = 0; i < log_w.size(); ++i) {
    if (keep[static_cast<std::size_t>(i)] != 0) {
      w[i] = std::exp(log_w[i] - max_kept);
      terms.push_back(w[i]);
    }
  }
  const double z = io::pairwise_sum(terms);
  w /= z;
  return w;
}

std::pair<double, double> ess(const Eigen::VectorXd& weights) {
  std::vector<double> sq(static_cast<std::size_t>(weights.size()));
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    sq[static_cast<std::size_t>(i)] = weights[i] * weights[i];
  }
  const double sum_sq = io::pairwise_sum(sq);
  const double ess_abs = sum_sq > 0.0 ? 1.0 / sum_sq : 0.0;
  return {ess_abs, ess_abs / static_cast<double>(weights.size())};
}

double expectation(const WeightedEnsemble& ens, const Observable& obs) {
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(ens.R.size()));
  for (Eigen::Index i = 0; i < ens.R.size(); ++i) {
    if (ens.keep[static_cast<std::size_t>(i)] != 0) {
      terms.push_back(ens.weights[i] * obs(ens.R[i]));
    }
  }
  return io::pairwise_sum(terms);
}

std::pair<double, double> bootstrap_with_streams(
    const WeightedEnsemble& ens, const Observable& obs, int n_boot,
    const std::function<Rng(int)>& stream_for) {
  if (n_boot < 2) throw Error("bootstrap needs n_boot >= 2");
  std::vector<Eigen::Index> survivors;
  std::vector<double> values;
  for (Eigen::Index i = 0; i < ens.R.size(); ++i) {
    if (ens.keep[static_cast<std::size_t>(i)] != 0) {
      survivors.push_back(i);
      values.push_back(obs(ens.R[i]));
    }
  }
  if (survivors.empty()) throw AllClipped("bootstrap on an ensemble with no survivors");
  const std::size_t n = survivors.size();
  std::vector<double> estimates(static_cast<std::size_t>(n_boot));
  for (int b = 0; b < n_boot; ++b) {
    Rng rng = stream_for(b);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const auto pick = static_cast<std::size_t>(rng.below(n));
      const double w = ens.weights[survivors[pick]];
      num += w * values[pick];
      den += w;
    }
    estimates[static_cast<std::size_t>(b)] = num / den;
  }
  const double mean = io::pairwise_sum(estimates) / static_cast<double>(n_boot);
  double var = 0.0;
  for (double e : estimates) var += (e - mean) * (e - mean);
  var /= static_cast<double>(n_boot - 1);
  return {mean, std::sqrt(var)};
}

std::pair<double, double> bootstrap(const WeightedEnsemble& ens, const Observable& obs,
                                    int n_boot, std::uint64_t seed) {
  return bootstrap_with_streams(ens, obs, n_boot, [seed](int b) {
    return Rng::substream(seed, static_cast<std::uint64_t>(b));
  });
}

WeightedEnsemble make_ensemble(const Eigen::VectorXd& R, const Eigen::VectorXd& log_q,
                               const Eigen::VectorXd& energy, const ThermoState& thermo,
                               const ClipPolicy& policy) {
  if (R.size() != log_q.size() || R.size() != energy.size()) {
    throw ShapeMismatch("ensemble component lengths differ");
  }
  WeightedEnsemble ens;
  ens.R = R;
  ens.log_q = log_q;
  ens.energy = energy;
  ens.log_w = log_weights(energy, log_q, thermo);
  if (policy.cap_at_threshold) {
    const auto n_cap = static_cast<Eigen::Index>(
        std::floor(policy.fraction * static_cast<double>(ens.log_w.size())));
    if (n_cap > 0) {
      const auto order = descending_order(ens.log_w);
      const double threshold = ens.log_w[order[static_cast<std::size_t>(n_cap)]];
      for (Eigen::Index i = 0; i < n_cap; ++i) {
        ens.log_w[order[static_cast<std::size_t>(i)]] = threshold;
      }
    }
    ens.keep.assign(static_cast<std::size_t>(ens.log_w.size()), 1);
  } else {
    ens.keep = clip(ens.log_w, policy);
  }
  ens.weights = normalize(ens.log_w, ens.keep);
  ens.n_survivors = 0;
  for (auto k : ens.keep) ens.n_survivors += k;
  Eigen::VectorXd survivor_weights(ens.n_survivors);
  Eigen::Index j = 0;
  for (Eigen::Index i = 0; i < ens.weights.size(); ++i) {
    if (ens.keep[static_cast<std::size_t>(i)] != 0) survivor_weights[j++] = ens.weights[i];
  }
  const auto [abs, norm] = ess(survivor_weights);
  ens.ess_abs = abs;
  ens.ess_norm = norm;
  return ens;
}

void save_ensemble(const WeightedEnsemble& ens, const std::filesystem::path& path) {
  io::json header;
  header["count"] = ens.R.size();
  header["ess_abs"] = ens.ess_abs;
  header["ess_norm"] = ens.ess_norm;
  header["n_survivors"] = ens.n_survivors;
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(ens.R.size()) * 6);
  for (Eigen::Index i = 0; i < ens.R.size(); ++i) {
    flat.push_back(ens.R[i]);
    flat.push_back(ens.log_q[i]);
    flat.push_back(ens.energy[i]);
    flat.push_back(ens.log_w[i]);
    flat.push_back(static_cast<double>(ens.keep[static_cast<std::size_t>(i)]));
    flat.push_back(ens.weights[i]);
  }
  io::write_container(path, kEnsembleMagic, header, io::doubles_to_bytes(flat), false);
}

WeightedEnsemble load_ensemble(const std::filesystem::path& path) {
  const io::Container c = io::read_container(path, kEnsembleMagic, false);
  const auto count = c.header.at("count").get<Eigen::Index>();
  const std::vector<double> flat = io::bytes_to_doubles(c.payload);
  if (static_cast<Eigen::Index>(flat.size()) != count * 6) {
    throw FormatError("ensemble payload does not match header count: " + path.string());
  }
  WeightedEnsemble ens;
  ens.R.resize(count);
  ens.log_q.resize(count);
  ens.energy.resize(count);
  ens.log_w.resize(count);
  ens.keep.resize(static_cast<std::size_t>(count));
  ens.weights.resize(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    const std::size_t k = static_cast<std::size_t>(i) * 6;
    ens.R[i] = flat[k];
    ens.log_q[i] = flat[k + 1];
    ens.energy[i] = flat[k + 2];
    ens.log_w[i] = flat[k + 3];
    ens.keep[static_cast<std::size_t>(i)] = flat[k + 4] != 0.0 ? 1 : 0;
    ens.weights[i] = flat[k + 5];
  }
  ens.ess_abs = c.header.at("ess_abs").get<double>();
  ens.ess_norm = c.header.at("ess_norm").get<double>();
  ens.n_survivors = c.header.at("n_survivors").get<Eigen::Index>();
  return ens;
}

void export_ensemble_csv(const WeightedEnsemble& ens, const std::filesystem::path& path) {
  std::ostringstream out;
  out.precision(17);
  out << "R,log_q,energy,log_w,keep,weight\n";
  for (Eigen::Index i = 0; i < ens.R.size(); ++i) {
    out << ens.R[i] << "," << ens.log_q[i] << "," << ens.energy[i] << "," << ens.log_w[i]
        << "," << int(ens.keep[static_cast<std::size_t>(i)]) << "," << ens.weights[i]
        << "\n";
  }
  io::write_text_file(path, out.str());
}

}  // namespace cgbg
