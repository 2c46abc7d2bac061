// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#include "cgbg/cnf.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <thread>

#include "cgbg/io.hpp"
#include "cgbg/nn/spec_json.hpp"

namespace cgbg {

using nn::Mat;

namespace {
constexpr const char* kSampleMagic = "CGBG-SMP1";
}

FlowModel make_flow_model(const std::vector<int>& hidden, nn::Act activation,
                          const nn::TimeEmbeddingSpec& embed, std::uint64_t seed) {
  FlowModel m;
  m.embed = embed;
  m.mlp.input = 1 + embed.dim;
  m.mlp.hidden = hidden;
  m.mlp.output = 1;
  m.mlp.activation = activation;
  m.mlp.final_linear = true;
  nn::ParamLayout layout;
  nn::mlp_append_layout(m.mlp, "mlp.", layout);
  m.params = nn::ParamVector::zeros(std::move(layout));
  Rng rng = Rng::substream(seed, 0x464c4f57ULL);  // "FLOW"
  nn::mlp_init(m.mlp, "mlp.", m.params, rng);
  return m;
}

namespace {

// Single-sample evaluator with preallocated workspace; inference hot path.
class FlowFieldEval {
 public:
  explicit FlowFieldEval(const FlowModel& m) : m_(m) {
    const auto widths = m.mlp.widths();
    const std::size_t n_layers = widths.size() - 1;
    for (std::size_t l = 0; l < n_layers; ++l) {
      const auto& we = m.params.layout.at("mlp.W" + std::to_string(l));
      const auto& be = m.params.layout.at("mlp.b" + std::to_string(l));
      W_.emplace_back(m.params.data.data() + we.offset, we.rows, we.cols);
      b_.emplace_back(m.params.data.data() + be.offset, be.rows);
      a_.emplace_back(Eigen::VectorXd::Zero(widths[l + 1]));
      adot_.emplace_back(Eigen::VectorXd::Zero(widths[l + 1]));
      h_.emplace_back(Eigen::VectorXd::Zero(widths[l + 1]));
      hdot_.emplace_back(Eigen::VectorXd::Zero(widths[l + 1]));
    }
    input_.resize(m.mlp.input);
    const int pairs = m.embed.dim / 2;
    omegas_.resize(pairs);
    for (int k = 0; k < pairs; ++k) {
      const double frac = pairs == 1 ? 0.0 : static_cast<double>(k) / (pairs - 1);
      omegas_[k] =
          m.embed.omega_min * std::pow(m.embed.omega_max / m.embed.omega_min, frac);
    }
  }

  double value(double t, double x) const {
    fill_input(t, x);
    const std::size_t n = W_.size();
    const Eigen::VectorXd* prev = &input_;
    for (std::size_t l = 0; l < n; ++l) {
      a_[l].noalias() = W_[l] * (*prev);
      a_[l] += b_[l];
      if (l + 1 < n) {
        h_[l] = nn::act_value(m_.mlp.activation, a_[l]);
        prev = &h_[l];
      }
    }
    return a_[n - 1][0];
  }

  std::pair<double, double> value_and_div(double t, double x) const {
    fill_input(t, x);
    const std::size_t n = W_.size();
    const Eigen::VectorXd* prev = &input_;
    const Eigen::VectorXd* prev_dot = nullptr;  // layer 0 tangent is W.col(0)
    for (std::size_t l = 0; l < n; ++l) {
      a_[l].noalias() = W_[l] * (*prev);
      a_[l] += b_[l];
      if (l == 0) {
        adot_[l] = W_[l].col(0);
      } else {
        adot_[l].noalias() = W_[l] * (*prev_dot);
      }
      if (l + 1 < n) {
        h_[l] = nn::act_value(m_.mlp.activation, a_[l]);
        hdot_[l] = (nn::act_deriv(m_.mlp.activation, a_[l]).array() * adot_[l].array())
                       .matrix();
        prev = &h_[l];
        prev_dot = &hdot_[l];
      }
    }
    return {a_[n - 1][0], adot_[n - 1][0]};
  }

 private:
  void fill_input(double t, double x) const {
    input_[0] = x;
    for (Eigen::Index k = 0; k < omegas_.size(); ++k) {
      input_[1 + 2 * k] = std::sin(omegas_[k] * t);
      input_[2 + 2 * k] = std::cos(omegas_[k] * t);
    }
  }

  const FlowModel& m_;
  std::vector<Eigen::Map<const Mat>> W_;
  std::vector<Eigen::Map<const Eigen::VectorXd>> b_;
  mutable std::vector<Eigen::VectorXd> a_, adot_, h_, hdot_;
  mutable Eigen::VectorXd input_;
  Eigen::VectorXd omegas_;
};

Mat field_inputs(const FlowModel& m, const Eigen::VectorXd& t, const Eigen::VectorXd& x) {
  Mat z(1 + m.embed.dim, x.size());
  z.row(0) = x.transpose();
  z.bottomRows(m.embed.dim) = nn::time_embedding(m.embed, t);
  return z;
}

}  // namespace

double vector_field(const FlowModel& m, double t, double x) {
  return FlowFieldEval(m).value(t, x);
}

Eigen::VectorXd vector_field(const FlowModel& m, double t, const Eigen::VectorXd& x) {
  const Eigen::VectorXd tv = Eigen::VectorXd::Constant(x.size(), t);
  const Mat v = nn::mlp_forward(m.mlp, "mlp.", m.params, field_inputs(m, tv, x));
  return v.row(0).transpose();
}

std::pair<double, double> vector_field_and_div(const FlowModel& m, double t, double x) {
  return FlowFieldEval(m).value_and_div(t, x);
}

CFMDraws draw_cfm(Eigen::Index batch, Rng& rng) {
  CFMDraws d;
  d.x0.resize(batch);
  d.t.resize(batch);
  for (Eigen::Index i = 0; i < batch; ++i) {
    d.x0[i] = rng.normal();
    d.t[i] = rng.uniform();
  }
  return d;
}

namespace {

void cfm_parts(const Eigen::VectorXd& x1, const CFMDraws& draws, Eigen::VectorXd& xt,
               Eigen::VectorXd& target) {
  if (x1.size() != draws.x0.size() || x1.size() != draws.t.size()) {
    throw ShapeMismatch("CFM batch/draw size mismatch");
  }
  xt = ((1.0 - draws.t.array()) * draws.x0.array() + draws.t.array() * x1.array()).matrix();
  target = x1 - draws.x0;
}

}  // namespace

double cfm_loss_paired(const FlowModel& m, const Eigen::VectorXd& x1, const CFMDraws& draws) {
  Eigen::VectorXd xt, target;
  cfm_parts(x1, draws, xt, target);
  const Mat v = nn::mlp_forward(m.mlp, "mlp.", m.params, field_inputs(m, draws.t, xt));
  return (v.row(0).transpose() - target).array().square().mean();
}

double cfm_loss_paired_grad(const FlowModel& m, const Eigen::VectorXd& x1,
                            const CFMDraws& draws, Eigen::VectorXd& grad) {
  Eigen::VectorXd xt, target;
  cfm_parts(x1, draws, xt, target);
  const Mat z = field_inputs(m, draws.t, xt);
  Mat target_row(1, target.size());
  target_row.row(0) = target.transpose();
  return nn::value_and_grad(
      m.params,
      [&](nn::Tape& tape, const nn::TapeParams& tp) {
        const int v = nn::mlp_build(tape, m.mlp, "mlp.", tp, tape.leaf(z, false));
        const int res = tape.sub(v, tape.leaf(target_row, false));
        return tape.mean_all(tape.hadamard(res, res));
      },
      grad);
}

double cfm_loss(const FlowModel& m, const Eigen::VectorXd& x1, Rng& rng) {
  const CFMDraws draws = draw_cfm(x1.size(), rng);
  return cfm_loss_paired(m, x1, draws);
}

std::pair<FlowModel, FlowTrainHistory> train_flow(const CGDataset& ds,
                                                  const FlowTrainConfig& cfg) {
  if (!ds.standardizer.has_value()) {
    throw Error("train_flow requires a standardized dataset");
  }
  FlowModel model = make_flow_model(cfg.hidden, cfg.activation, cfg.embed, cfg.seed);
  model.standardizer = *ds.standardizer;

  const Eigen::VectorXd coords = ds.coordinates();
  const std::size_t n = static_cast<std::size_t>(coords.size());
  const std::size_t batch_size = static_cast<std::size_t>(cfg.batch_size);
  const std::int64_t steps_per_epoch =
      static_cast<std::int64_t>((n + batch_size - 1) / batch_size);
  const nn::LRSchedule schedule = nn::LRSchedule::cosine(
      cfg.lr_start, cfg.lr_end, std::max<std::int64_t>(1, cfg.epochs * steps_per_epoch));
  nn::OptimizerState opt = nn::make_optimizer(cfg.optimizer, model.params.data.size());

  Rng shuffle_rng = Rng::substream(cfg.seed, 0x53484652ULL);
  Rng draw_rng = Rng::substream(cfg.seed, 0x44524157ULL);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Eigen::VectorXd grad(model.params.data.size());
  FlowTrainHistory history;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.below(i))]);
    }
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < n; begin += batch_size) {
      const std::size_t end = std::min(n, begin + batch_size);
      Eigen::VectorXd x1(static_cast<Eigen::Index>(end - begin));
      for (std::size_t i = begin; i < end; ++i) {
        x1[static_cast<Eigen::Index>(i - begin)] = coords[static_cast<Eigen::Index>(order[i])];
      }
      const CFMDraws draws = draw_cfm(x1.size(), draw_rng);
      double loss = 0.0;
      try {
        loss = cfm_loss_paired_grad(model, x1, draws, grad);
      } catch (const NonFiniteLoss&) {
        throw NonFiniteLoss("CFM loss became non-finite at epoch " + std::to_string(epoch));
      }
      if (cfg.grad_clip > 0.0) grad = nn::clip_global_norm(grad, cfg.grad_clip);
      nn::optimizer_step(opt, model.params.data, grad, schedule);
      epoch_loss += loss * static_cast<double>(end - begin);
    }
    history.train_loss.push_back(epoch_loss / static_cast<double>(n));
  }
  return {std::move(model), std::move(history)};
}

FlowSampleBatch sample_with_logdensity(const FlowModel& m, int n, std::uint64_t seed,
                                       const ODESolverConfig& cfg, int threads) {
  FlowSampleBatch batch;
  batch.R.resize(n);
  batch.log_q.resize(n);
  const double log_std = std::log(m.standardizer.std);
  std::vector<SolverStats> stats(static_cast<std::size_t>(std::max(1, threads)));
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&](int worker_id, int begin, int end) {
    try {
      FlowFieldEval field(m);
      SolverStats& st = stats[static_cast<std::size_t>(worker_id)];
      for (int i = begin; i < end; ++i) {
        Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(i));
        const double z = rng.normal();
        try {
          const auto [x1, dl] = flow_transport(field, z, cfg, &st);
          batch.R[i] = m.standardizer.from_standardized(x1);
          batch.log_q[i] = standard_normal_logpdf(z) - dl - log_std;
        } catch (const SolverFailure& e) {
          throw SolverFailure("chain " + std::to_string(i) + ": " + e.what());
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mu);
      if (!failure) failure = std::current_exception();
    }
  };

  const int n_workers = std::max(1, std::min(threads, n));
  if (n_workers == 1) {
    worker(0, 0, n);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n + n_workers - 1) / n_workers;
    for (int w = 0; w < n_workers; ++w) {
      const int begin = w * chunk;
      const int end = std::min(n, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, w, begin, end);
    }
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  for (const auto& st : stats) {
    batch.stats.n_accepted += st.n_accepted;
    batch.stats.n_rejected += st.n_rejected;
    batch.stats.n_feval += st.n_feval;
  }
  return batch;
}

double log_density_at(const FlowModel& m, double R, const ODESolverConfig& cfg,
                      SolverStats* stats) {
  FlowFieldEval field(m);
  const double x1 = m.standardizer.to_standardized(R);
  const auto [x0, dl] = flow_transport_reverse(field, x1, cfg, stats);
  return standard_normal_logpdf(x0) - dl - std::log(m.standardizer.std);
}

Eigen::VectorXd log_density_at(const FlowModel& m, const Eigen::VectorXd& R,
                               const ODESolverConfig& cfg, int threads) {
  Eigen::VectorXd out(R.size());
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&](Eigen::Index begin, Eigen::Index end) {
    try {
      FlowFieldEval field(m);
      const double log_std = std::log(m.standardizer.std);
      for (Eigen::Index i = begin; i < end; ++i) {
        const double x1 = m.standardizer.to_standardized(R[i]);
        const auto [x0, dl] = flow_transport_reverse(field, x1, cfg, nullptr);
        out[i] = standard_normal_logpdf(x0) - dl - log_std;
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mu);
      if (!failure) failure = std::current_exception();
    }
  };
  const int n_workers =
      std::max(1, std::min<int>(threads, static_cast<int>(R.size())));
  if (n_workers == 1) {
    worker(0, R.size());
  } else {
    std::vector<std::thread> pool;
    const Eigen::Index chunk = (R.size() + n_workers - 1) / n_workers;
    for (int w = 0; w < n_workers; ++w) {
      const Eigen::Index begin = w * chunk;
      const Eigen::Index end = std::min<Eigen::Index>(R.size(), begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

void save_flow_checkpoint(const FlowModel& m, const std::filesystem::path& path) {
  nlohmann::json specs;
  specs["mlp"] = m.mlp;
  specs["embed"] = m.embed;
  specs["standardizer"] = {{"mean", m.standardizer.mean}, {"std", m.standardizer.std}};
  nn::save_checkpoint(path, "cnf", specs, m.params.data);
}

FlowModel load_flow_checkpoint(const std::filesystem::path& path) {
  const nn::Checkpoint ckpt = nn::load_checkpoint(path);
  if (ckpt.kind != "cnf") throw FormatError("checkpoint kind is not 'cnf': " + ckpt.kind);
  FlowModel m;
  m.mlp = ckpt.specs.at("mlp").get<nn::MLPSpec>();
  m.embed = ckpt.specs.at("embed").get<nn::TimeEmbeddingSpec>();
  m.standardizer = Standardizer{ckpt.specs["standardizer"].at("mean").get<double>(),
                                ckpt.specs["standardizer"].at("std").get<double>()};
  nn::ParamLayout layout;
  nn::mlp_append_layout(m.mlp, "mlp.", layout);
  if (layout.size() != ckpt.params.size()) {
    throw FormatError("flow checkpoint parameter count mismatch");
  }
  m.params.layout = std::move(layout);
  m.params.data = ckpt.params;
  return m;
}

void save_flow_history_csv(const FlowTrainHistory& history,
                           const std::filesystem::path& path) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,train_loss\n";
  for (std::size_t i = 0; i < history.train_loss.size(); ++i) {
    out << i << "," << history.train_loss[i] << "\n";
  }
  io::write_text_file(path, out.str());
}

void save_samples(const FlowSampleBatch& batch, const std::filesystem::path& path) {
  io::json header;
  header["count"] = batch.R.size();
  header["n_accepted"] = batch.stats.n_accepted;
  header["n_rejected"] = batch.stats.n_rejected;
  header["n_feval"] = batch.stats.n_feval;
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(batch.R.size()) * 2);
  for (Eigen::Index i = 0; i < batch.R.size(); ++i) {
    flat.push_back(batch.R[i]);
    flat.push_back(batch.log_q[i]);
  }
  io::write_container(path, kSampleMagic, header, io::doubles_to_bytes(flat), false);
}

FlowSampleBatch load_samples(const std::filesystem::path& path) {
  const io::Container c = io::read_container(path, kSampleMagic, false);
  const auto count = c.header.at("count").get<Eigen::Index>();
  const std::vector<double> flat = io::bytes_to_doubles(c.payload);
  if (static_cast<Eigen::Index>(flat.size()) != count * 2) {
    throw FormatError("sample payload does not match header count: " + path.string());
  }
  FlowSampleBatch batch;
  batch.R.resize(count);
  batch.log_q.resize(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    batch.R[i] = flat[static_cast<std::size_t>(2 * i)];
    batch.log_q[i] = flat[static_cast<std::size_t>(2 * i + 1)];
  }
  batch.stats.n_accepted = c.header.value("n_accepted", 0);
  batch.stats.n_rejected = c.header.value("n_rejected", 0);
  batch.stats.n_feval = c.header.value("n_feval", 0);
  return batch;
}

}  // namespace cgbg
