// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#include "cgbg/pmf.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "cgbg/io.hpp"
#include "cgbg/nn/spec_json.hpp"
#include "cgbg/rng.hpp"

namespace cgbg {

using nn::Mat;

PMFModel make_pmf_model(const nn::RBFLayerSpec& rbf, const std::vector<int>& hidden,
                        nn::Act activation, std::uint64_t seed) {
  PMFModel m;
  m.rbf = rbf;
  m.mlp.input = rbf.n_centers;
  m.mlp.hidden = hidden;
  m.mlp.output = 1;
  m.mlp.activation = activation;
  m.mlp.final_linear = true;
  nn::ParamLayout layout;
  nn::rbf_append_layout(m.rbf, "rbf.", layout);
  nn::mlp_append_layout(m.mlp, "mlp.", layout);
  m.params = nn::ParamVector::zeros(std::move(layout));
  Rng rng = Rng::substream(seed, 0x504d46ULL);  // "PMF"
  nn::rbf_init(m.rbf, "rbf.", m.params, rng);
  nn::mlp_init(m.mlp, "mlp.", m.params, rng);
  return m;
}

namespace {

// Network-native energies for a 1 x B coordinate row.
Mat net_energy(const PMFModel& m, const Mat& r) {
  return nn::mlp_forward(m.mlp, "mlp.", m.params, nn::rbf_forward(m.rbf, "rbf.", m.params, r));
}

void net_energy_tangent(const PMFModel& m, const Mat& r, Mat& u, Mat& udot) {
  Mat phi, phidot;
  nn::rbf_forward_tangent(m.rbf, "rbf.", m.params, r, phi, phidot);
  nn::mlp_forward_tangent(m.mlp, "mlp.", m.params, phi, phidot, u, udot);
}

Mat to_native(const PMFModel& m, const Eigen::VectorXd& R) {
  Mat r(1, R.size());
  if (m.input_gauge.has_value()) {
    for (Eigen::Index i = 0; i < R.size(); ++i) {
      r(0, i) = m.input_gauge->to_standardized(R[i]);
    }
  } else {
    r.row(0) = R.transpose();
  }
  return r;
}

}  // namespace

double pmf_energy(const PMFModel& m, double R) {
  Eigen::VectorXd v(1);
  v[0] = R;
  return pmf_energy(m, v)[0];
}

Eigen::VectorXd pmf_energy(const PMFModel& m, const Eigen::VectorXd& R) {
  const Mat u = net_energy(m, to_native(m, R));
  return u.row(0).transpose();
}

double pmf_mean_force(const PMFModel& m, double R) {
  Eigen::VectorXd v(1);
  v[0] = R;
  return pmf_mean_force(m, v)[0];
}

Eigen::VectorXd pmf_mean_force(const PMFModel& m, const Eigen::VectorXd& R) {
  Mat u, udot;
  net_energy_tangent(m, to_native(m, R), u, udot);
  Eigen::VectorXd f = -udot.row(0).transpose();
  // dU/dR = dU/dR' * dR'/dR with R' = (R - mean)/std.
  if (m.input_gauge.has_value()) f /= m.input_gauge->std;
  return f;
}

namespace {

Mat batch_coords(const std::vector<CGSample>& batch) {
  Mat r(1, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) r(0, static_cast<Eigen::Index>(i)) = batch[i].R;
  return r;
}

Mat batch_forces(const std::vector<CGSample>& batch) {
  Mat f(1, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    f(0, static_cast<Eigen::Index>(i)) = batch[i].F_proj;
  }
  return f;
}

int build_fm_loss(nn::Tape& tape, const nn::TapeParams& tp, const PMFModel& m,
                  const Mat& r, const Mat& f) {
  const int r_id = tape.leaf(r, false);
  const int f_id = tape.leaf(f, false);
  const auto [phi, phidot] = nn::rbf_build_tangent(tape, m.rbf, "rbf.", tp, r_id);
  const auto [u, udot] = nn::mlp_build_tangent(tape, m.mlp, "mlp.", tp, phi, phidot);
  (void)u;
  const int res = tape.add(udot, f_id);
  return tape.mean_all(tape.hadamard(res, res));
}

}  // namespace

double fm_loss(const PMFModel& m, const std::vector<CGSample>& batch) {
  if (batch.empty()) throw Error("fm_loss needs a nonempty batch");
  Mat u, udot;
  net_energy_tangent(m, batch_coords(batch), u, udot);
  const Mat res = udot + batch_forces(batch);
  return res.array().square().mean();
}

double fm_loss_grad(const PMFModel& m, const std::vector<CGSample>& batch,
                    Eigen::VectorXd& grad) {
  if (batch.empty()) throw Error("fm_loss needs a nonempty batch");
  const Mat r = batch_coords(batch);
  const Mat f = batch_forces(batch);
  return nn::value_and_grad(
      m.params,
      [&](nn::Tape& tape, const nn::TapeParams& tp) {
        return build_fm_loss(tape, tp, m, r, f);
      },
      grad);
}

std::pair<PMFModel, TrainHistory> train_pmf(const CGDataset& ds, const FMTrainConfig& cfg) {
  if (static_cast<std::size_t>(cfg.batch_size) > ds.samples.size()) {
    throw Error("batch size exceeds dataset size");
  }
  auto [train, val] = split(ds, cfg.split_ratio, cfg.seed);
  PMFModel model = make_pmf_model(cfg.rbf, cfg.hidden, cfg.activation, cfg.seed);
  model.input_gauge = ds.standardizer;

  nn::OptimizerState opt = nn::make_optimizer(cfg.optimizer, model.params.data.size());
  const nn::LRSchedule schedule = nn::LRSchedule::constant(cfg.learning_rate);
  Rng shuffle_rng = Rng::substream(cfg.seed, 0x5348464cULL);  // shuffle stream

  TrainHistory history;
  Eigen::VectorXd best_params = model.params.data;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = -1;

  std::vector<std::size_t> order(train.samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<CGSample> batch;
  batch.reserve(static_cast<std::size_t>(cfg.batch_size));
  Eigen::VectorXd grad(model.params.data.size());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.below(i))]);
    }
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(train.samples[order[i]]);
      double loss = 0.0;
      try {
        loss = fm_loss_grad(model, batch, grad);
      } catch (const NonFiniteLoss&) {
        throw NonFiniteLoss("force-matching loss became non-finite at epoch " +
                            std::to_string(epoch));
      }
      if (cfg.grad_clip > 0.0) grad = nn::clip_global_norm(grad, cfg.grad_clip);
      nn::optimizer_step(opt, model.params.data, grad, schedule);
      epoch_loss += loss * static_cast<double>(end - begin);
      seen += end - begin;
    }
    history.train_loss.push_back(epoch_loss / static_cast<double>(seen));
    const double val_loss = val.samples.empty() ? 0.0 : fm_loss(model, val.samples);
    if (!std::isfinite(val_loss)) {
      throw NonFiniteLoss("validation loss became non-finite at epoch " +
                          std::to_string(epoch));
    }
    history.val_loss.push_back(val_loss);
    if (val_loss < best_val) {
      best_val = val_loss;
      best_epoch = epoch;
      best_params = model.params.data;
    }
  }
  model.params.data = best_params;
  history.best_epoch = best_epoch;
  history.best_val_loss = best_val;
  return {std::move(model), std::move(history)};
}

void save_history_csv(const TrainHistory& history, const std::filesystem::path& path) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,train_loss,val_loss\n";
  for (std::size_t i = 0; i < history.train_loss.size(); ++i) {
    out << i << "," << history.train_loss[i] << ","
        << (i < history.val_loss.size() ? history.val_loss[i] : 0.0) << "\n";
  }
  io::write_text_file(path, out.str());
}

void save_pmf_checkpoint(const PMFModel& m, const std::filesystem::path& path) {
  nlohmann::json specs;
  specs["rbf"] = m.rbf;
  specs["mlp"] = m.mlp;
  if (m.input_gauge.has_value()) {
    specs["input_gauge"] = {{"mean", m.input_gauge->mean}, {"std", m.input_gauge->std}};
  } else {
    specs["input_gauge"] = nullptr;
  }
  nn::save_checkpoint(path, "pmf", specs, m.params.data);
}

PMFModel load_pmf_checkpoint(const std::filesystem::path& path) {
  const nn::Checkpoint ckpt = nn::load_checkpoint(path);
  if (ckpt.kind != "pmf") throw FormatError("checkpoint kind is not 'pmf': " + ckpt.kind);
  PMFModel m;
  m.rbf = ckpt.specs.at("rbf").get<nn::RBFLayerSpec>();
  m.mlp = ckpt.specs.at("mlp").get<nn::MLPSpec>();
  if (!ckpt.specs.at("input_gauge").is_null()) {
    m.input_gauge = Standardizer{ckpt.specs["input_gauge"].at("mean").get<double>(),
                                 ckpt.specs["input_gauge"].at("std").get<double>()};
  }
  nn::ParamLayout layout;
  nn::rbf_append_layout(m.rbf, "rbf.", layout);
  nn::mlp_append_layout(m.mlp, "mlp.", layout);
  if (layout.size() != ckpt.params.size()) {
    throw FormatError("PMF checkpoint parameter count mismatch");
  }
  m.params.layout = std::move(layout);
  m.params.data = ckpt.params;
  return m;
}

void export_pmf_table_csv(const PMFModel& m, const Eigen::VectorXd& grid,
                          const std::filesystem::path& path) {
  Eigen::VectorXd u = pmf_energy(m, grid);
  u.array() -= u.minCoeff();
  const Eigen::VectorXd f = pmf_mean_force(m, grid);
  std::ostringstream out;
  out.precision(17);
  out << "R,U,mean_force\n";
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    out << grid[i] << "," << u[i] << "," << f[i] << "\n";
  }
  io::write_text_file(path, out.str());
}

}  // namespace cgbg
