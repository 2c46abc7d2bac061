// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "cgbg/errors.hpp"
#include "cgbg/potential.hpp"
#include "cgbg/rng.hpp"

namespace cgbg {

struct LangevinParams {
  double dt = 0.1;
  double mass = 1.0;
  double gamma = 0.1;
  double kT = 1.0;
};

struct TrajectoryConfig {
  std::int64_t n_steps = 10'000'000;
  std::int64_t save_every = 10;
  int n_trajectories = 10;
  std::array<double, 4> init_box{10.0, 50.0, 10.0, 50.0};  // xmin,xmax,ymin,ymax
  double init_velocity_sigma = 0.1;
  std::uint64_t seed = 0;
  double burn_in_fraction = 0.0;
  std::array<double, 4> guard_box{-100.0, 160.0, -100.0, 160.0};
  bool euler_maruyama = false;  // literal-fidelity mode; default is BAOAB
};

struct DatasetRecord {
  double x, y, fx, fy;
};

struct AtomisticDataset {
  std::vector<DatasetRecord> records;
  LangevinParams params;
  TrajectoryConfig config;
  std::optional<UmbrellaBias> bias;
  std::string bias_description = "none";
  MBParams potential = MBParams::defaults();
  std::string potential_hash;
};

std::string potential_hash(const MBParams& params);

// One underdamped Langevin trajectory under an arbitrary total force field.
// BAOAB splitting with a single force evaluation per step; gamma = 0 reduces
// to velocity Verlet.
template <typename ForceFn>
class BaoabIntegrator {
 public:
  BaoabIntegrator(const LangevinParams& p, ForceFn force)
      : p_(p),
        force_(std::move(force)),
        c1_(std::exp(-p.gamma * p.dt)),
        c2_(std::sqrt(p.kT / p.mass * (1.0 - c1_ * c1_))) {}

  void reset(const Eigen::Vector2d& position, const Eigen::Vector2d& velocity) {
    pos_ = position;
    vel_ = velocity;
    force_cache_ = force_(pos_);
  }

  void step(Rng& rng) {
    const double half_dt = 0.5 * p_.dt;
    vel_ += half_dt / p_.mass * force_cache_;
    pos_ += half_dt * vel_;
    const double nx = rng.normal();
    const double ny = rng.normal();
    vel_ = c1_ * vel_ + c2_ * Eigen::Vector2d(nx, ny);
    pos_ += half_dt * vel_;
    force_cache_ = force_(pos_);
    vel_ += half_dt / p_.mass * force_cache_;
  }

  // Euler-Maruyama discretization of the same SDE.
  void step_euler(Rng& rng) {
    const double nx = rng.normal();
    const double ny = rng.normal();
    const Eigen::Vector2d noise(nx, ny);
    const Eigen::Vector2d acc = force_cache_ / p_.mass - p_.gamma * vel_;
    pos_ += p_.dt * vel_;
    vel_ += p_.dt * acc + std::sqrt(2.0 * p_.gamma * p_.kT / p_.mass * p_.dt) * noise;
    force_cache_ = force_(pos_);
  }

  const Eigen::Vector2d& position() const { return pos_; }
  const Eigen::Vector2d& velocity() const { return vel_; }
  double kinetic_energy() const { return 0.5 * p_.mass * vel_.squaredNorm(); }

 private:
  LangevinParams p_;
  ForceFn force_;
  double c1_, c2_;
  Eigen::Vector2d pos_ = Eigen::Vector2d::Zero();
  Eigen::Vector2d vel_ = Eigen::Vector2d::Zero();
  Eigen::Vector2d force_cache_ = Eigen::Vector2d::Zero();
};

namespace detail {

// ExtraForce: Vector2d(const Vector2d&) added on top of the unbiased force.
template <typename ExtraForce>
std::vector<DatasetRecord> run_trajectory(const LangevinParams& params,
                                          const TrajectoryConfig& config,
                                          const MBParams& mb, ExtraForce&& extra,
                                          int traj_index) {
  auto total_force = [&mb, &extra](const Eigen::Vector2d& r) -> Eigen::Vector2d {
    return mb_force(r, mb) + extra(r);
  };
  BaoabIntegrator<decltype(total_force)> integ(params, total_force);
  Rng rng = Rng::substream(config.seed, static_cast<std::uint64_t>(traj_index));
  const double x0 = rng.uniform(config.init_box[0], config.init_box[1]);
  const double y0 = rng.uniform(config.init_box[2], config.init_box[3]);
  const double vx0 = rng.normal(0.0, config.init_velocity_sigma);
  const double vy0 = rng.normal(0.0, config.init_velocity_sigma);
  integ.reset({x0, y0}, {vx0, vy0});

  const std::int64_t n_saves = config.n_steps / config.save_every;
  const std::int64_t burn_saves =
      static_cast<std::int64_t>(config.burn_in_fraction * static_cast<double>(n_saves));
  std::vector<DatasetRecord> records;
  records.reserve(static_cast<std::size_t>(n_saves - burn_saves));

  std::int64_t save_index = 0;
  for (std::int64_t step = 1; step <= config.n_steps; ++step) {
    if (config.euler_maruyama) {
      integ.step_euler(rng);
    } else {
      integ.step(rng);
    }
    const Eigen::Vector2d& r = integ.position();
    if (r.x() < config.guard_box[0] || r.x() > config.guard_box[1] ||
        r.y() < config.guard_box[2] || r.y() > config.guard_box[3] ||
        !r.allFinite()) {
      throw NumericalBlowup("trajectory " + std::to_string(traj_index) +
                            " left the guard box at step " + std::to_string(step) +
                            "; dt is likely unstable");
    }
    if (step % config.save_every == 0) {
      ++save_index;
      if (save_index > burn_saves) {
        const Eigen::Vector2d f = mb_force(r, mb);  // unbiased label
        records.push_back({r.x(), r.y(), f.x(), f.y()});
      }
    }
  }
  return records;
}

}  // namespace detail

template <typename ExtraForce>
AtomisticDataset simulate_with_extra_force(const LangevinParams& params,
                                           const TrajectoryConfig& config,
                                           ExtraForce&& extra,
                                           const std::string& bias_description,
                                           const MBParams& mb = MBParams::defaults(),
                                           int threads = 1) {
  if (config.n_trajectories < 1) throw Error("n_trajectories must be >= 1");
  if (config.save_every < 1 || config.n_steps % config.save_every != 0) {
    throw Error("save_every must divide n_steps");
  }
  std::vector<std::vector<DatasetRecord>> per_traj(
      static_cast<std::size_t>(config.n_trajectories));
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&](int begin, int end) {
    try {
      for (int k = begin; k < end; ++k) {
        per_traj[static_cast<std::size_t>(k)] =
            detail::run_trajectory(params, config, mb, extra, k);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mu);
      if (!failure) failure = std::current_exception();
    }
  };
  const int n_workers = std::max(1, std::min(threads, config.n_trajectories));
  if (n_workers == 1) {
    worker(0, config.n_trajectories);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (config.n_trajectories + n_workers - 1) / n_workers;
    for (int w = 0; w < n_workers; ++w) {
      const int begin = w * chunk;
      const int end = std::min(config.n_trajectories, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  AtomisticDataset ds;
  ds.params = params;
  ds.config = config;
  ds.bias_description = bias_description;
  ds.potential = mb;
  ds.potential_hash = potential_hash(mb);
  std::size_t total = 0;
  for (const auto& v : per_traj) total += v.size();
  ds.records.reserve(total);
  for (const auto& v : per_traj) ds.records.insert(ds.records.end(), v.begin(), v.end());
  return ds;
}

AtomisticDataset simulate(const LangevinParams& params, const TrajectoryConfig& config,
                          const std::optional<UmbrellaBias>& bias = std::nullopt,
                          const MBParams& mb = MBParams::defaults(), int threads = 1);

// Unbiased force labels for arbitrary positions (the bias never enters).
std::vector<Eigen::Vector2d> relabel_forces(const std::vector<Point2>& positions,
                                            const MBParams& mb = MBParams::defaults());

void save_dataset(const AtomisticDataset& ds, const std::filesystem::path& path);
AtomisticDataset load_dataset(const std::filesystem::path& path);
void export_dataset_csv(const AtomisticDataset& ds, const std::filesystem::path& path);

}  // namespace cgbg
