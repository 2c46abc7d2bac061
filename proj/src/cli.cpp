// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#include "cgbg/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "cgbg/analysis.hpp"
#include "cgbg/io.hpp"
#include "cgbg/json_bridge.hpp"
#include "cgbg/nn/spec_json.hpp"
#include "cgbg/version.hpp"

namespace cgbg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string hash_of_text(const std::string& text) {
  return io::to_hex(io::crc32(std::as_bytes(std::span(text.data(), text.size()))));
}

void check_keys(const json& j, const std::string& path,
                const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (allowed.find(key) == allowed.end()) {
      throw ConfigError(path + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["kT"] = cfg.thermo.kT;
  j["potential"] = cfg.potential;
  j["langevin"] = cfg.langevin;
  j["trajectory"] = cfg.trajectory;
  j["bias"] = {{"enabled", cfg.bias_enabled},
               {"amplitude", cfg.bias.amplitude},
               {"center", cfg.bias.center},
               {"width", cfg.bias.width}};
  j["cg"] = {{"mapping", cfg.cg_mapping.kind == CGMapKind::SliceX ? "slice_x" : "slice_y"},
             {"standardize_pmf", cfg.standardize_pmf},
             {"standardize_flow", cfg.standardize_flow}};
  j["pmf_train"] = {{"batch_size", cfg.pmf_train.batch_size},
                    {"epochs", cfg.pmf_train.epochs},
                    {"learning_rate", cfg.pmf_train.learning_rate},
                    {"beta1", cfg.pmf_train.optimizer.beta1},
                    {"beta2", cfg.pmf_train.optimizer.beta2},
                    {"eps", cfg.pmf_train.optimizer.eps},
                    {"grad_clip", cfg.pmf_train.grad_clip},
                    {"split_ratio", cfg.pmf_train.split_ratio},
                    {"seed", cfg.pmf_train.seed},
                    {"rbf", cfg.pmf_train.rbf},
                    {"hidden", cfg.pmf_train.hidden},
                    {"activation", nn::act_name(cfg.pmf_train.activation)}};
  j["flow_train"] = {{"batch_size", cfg.flow_train.batch_size},
                     {"epochs", cfg.flow_train.epochs},
                     {"lr_start", cfg.flow_train.lr_start},
                     {"lr_end", cfg.flow_train.lr_end},
                     {"weight_decay", cfg.flow_train.optimizer.weight_decay},
                     {"beta1", cfg.flow_train.optimizer.beta1},
                     {"beta2", cfg.flow_train.optimizer.beta2},
                     {"eps", cfg.flow_train.optimizer.eps},
                     {"grad_clip", cfg.flow_train.grad_clip},
                     {"seed", cfg.flow_train.seed},
                     {"hidden", cfg.flow_train.hidden},
                     {"activation", nn::act_name(cfg.flow_train.activation)},
                     {"time_embedding", cfg.flow_train.embed}};
  j["solver"] = {{"method", "dopri5"},
                 {"atol", cfg.solver.atol},
                 {"rtol", cfg.solver.rtol},
                 {"max_steps", cfg.solver.max_steps},
                 {"initial_step", cfg.solver.initial_step}};
  j["sample"] = {{"n_samples", cfg.n_samples}, {"seed", cfg.sample_seed}};
  j["reweight"] = {{"clip_fraction", cfg.clip_fraction},
                   {"mode", cfg.clip_cap ? "cap" : "discard"},
                   {"target", cfg.reweight_target}};
  j["metrics"] = {{"bins", cfg.metric_bins},
                  {"range", cfg.metric_range},
                  {"density_floor", cfg.density_floor},
                  {"y_range", cfg.y_range},
                  {"n_quad", cfg.n_quad},
                  {"n_boot", cfg.n_boot},
                  {"boot_seed", cfg.boot_seed}};
  j["out_dir"] = cfg.out_dir;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  check_keys(j, "$",
             {"kT", "potential", "langevin", "trajectory", "bias", "cg", "pmf_train",
              "flow_train", "solver", "sample", "reweight", "metrics", "out_dir"});
  maybe(j, "kT", cfg.thermo.kT);
  if (j.contains("potential")) cfg.potential = j["potential"].get<MBParams>();
  if (j.contains("langevin")) {
    check_keys(j["langevin"], "$.langevin", {"dt", "mass", "gamma", "kT"});
    maybe(j["langevin"], "dt", cfg.langevin.dt);
    maybe(j["langevin"], "mass", cfg.langevin.mass);
    maybe(j["langevin"], "gamma", cfg.langevin.gamma);
    maybe(j["langevin"], "kT", cfg.langevin.kT);
  }
  if (j.contains("trajectory")) {
    const auto& t = j["trajectory"];
    check_keys(t, "$.trajectory",
               {"n_steps", "save_every", "n_trajectories", "init_box",
                "init_velocity_sigma", "seed", "burn_in_fraction", "guard_box",
                "euler_maruyama"});
    maybe(t, "n_steps", cfg.trajectory.n_steps);
    maybe(t, "save_every", cfg.trajectory.save_every);
    maybe(t, "n_trajectories", cfg.trajectory.n_trajectories);
    maybe(t, "init_box", cfg.trajectory.init_box);
    maybe(t, "init_velocity_sigma", cfg.trajectory.init_velocity_sigma);
    maybe(t, "seed", cfg.trajectory.seed);
    maybe(t, "burn_in_fraction", cfg.trajectory.burn_in_fraction);
    maybe(t, "guard_box", cfg.trajectory.guard_box);
    maybe(t, "euler_maruyama", cfg.trajectory.euler_maruyama);
  }
  if (j.contains("bias")) {
    check_keys(j["bias"], "$.bias", {"enabled", "amplitude", "center", "width"});
    maybe(j["bias"], "enabled", cfg.bias_enabled);
    maybe(j["bias"], "amplitude", cfg.bias.amplitude);
    maybe(j["bias"], "center", cfg.bias.center);
    maybe(j["bias"], "width", cfg.bias.width);
  }
  if (j.contains("cg")) {
    check_keys(j["cg"], "$.cg", {"mapping", "standardize_pmf", "standardize_flow"});
    if (j["cg"].contains("mapping")) {
      const auto name = j["cg"]["mapping"].get<std::string>();
      if (name == "slice_x") {
        cfg.cg_mapping.kind = CGMapKind::SliceX;
      } else if (name == "slice_y") {
        cfg.cg_mapping.kind = CGMapKind::SliceY;
      } else {
        throw ConfigError("$.cg.mapping: unknown mapping '" + name + "'");
      }
    }
    maybe(j["cg"], "standardize_pmf", cfg.standardize_pmf);
    maybe(j["cg"], "standardize_flow", cfg.standardize_flow);
  }
  if (j.contains("pmf_train")) {
    const auto& p = j["pmf_train"];
    check_keys(p, "$.pmf_train",
               {"batch_size", "epochs", "learning_rate", "beta1", "beta2", "eps",
                "grad_clip", "split_ratio", "seed", "rbf", "hidden", "activation"});
    maybe(p, "batch_size", cfg.pmf_train.batch_size);
    maybe(p, "epochs", cfg.pmf_train.epochs);
    maybe(p, "learning_rate", cfg.pmf_train.learning_rate);
    maybe(p, "beta1", cfg.pmf_train.optimizer.beta1);
    maybe(p, "beta2", cfg.pmf_train.optimizer.beta2);
    maybe(p, "eps", cfg.pmf_train.optimizer.eps);
    maybe(p, "grad_clip", cfg.pmf_train.grad_clip);
    maybe(p, "split_ratio", cfg.pmf_train.split_ratio);
    maybe(p, "seed", cfg.pmf_train.seed);
    if (p.contains("rbf")) cfg.pmf_train.rbf = p["rbf"].get<nn::RBFLayerSpec>();
    maybe(p, "hidden", cfg.pmf_train.hidden);
    if (p.contains("activation")) {
      cfg.pmf_train.activation = nn::act_from_name(p["activation"].get<std::string>());
    }
  }
  if (j.contains("flow_train")) {
    const auto& f = j["flow_train"];
    check_keys(f, "$.flow_train",
               {"batch_size", "epochs", "lr_start", "lr_end", "weight_decay", "beta1",
                "beta2", "eps", "grad_clip", "seed", "hidden", "activation",
                "time_embedding"});
    maybe(f, "batch_size", cfg.flow_train.batch_size);
    maybe(f, "epochs", cfg.flow_train.epochs);
    maybe(f, "lr_start", cfg.flow_train.lr_start);
    maybe(f, "lr_end", cfg.flow_train.lr_end);
    maybe(f, "weight_decay", cfg.flow_train.optimizer.weight_decay);
    maybe(f, "beta1", cfg.flow_train.optimizer.beta1);
    maybe(f, "beta2", cfg.flow_train.optimizer.beta2);
    maybe(f, "eps", cfg.flow_train.optimizer.eps);
    maybe(f, "grad_clip", cfg.flow_train.grad_clip);
    maybe(f, "seed", cfg.flow_train.seed);
    maybe(f, "hidden", cfg.flow_train.hidden);
    if (f.contains("activation")) {
      cfg.flow_train.activation = nn::act_from_name(f["activation"].get<std::string>());
    }
    if (f.contains("time_embedding")) {
      cfg.flow_train.embed = f["time_embedding"].get<nn::TimeEmbeddingSpec>();
    }
  }
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    check_keys(s, "$.solver", {"method", "atol", "rtol", "max_steps", "initial_step"});
    if (s.contains("method") && s["method"].get<std::string>() != "dopri5") {
      throw ConfigError("$.solver.method: only 'dopri5' is supported");
    }
    maybe(s, "atol", cfg.solver.atol);
    maybe(s, "rtol", cfg.solver.rtol);
    maybe(s, "max_steps", cfg.solver.max_steps);
    maybe(s, "initial_step", cfg.solver.initial_step);
  }
  if (j.contains("sample")) {
    check_keys(j["sample"], "$.sample", {"n_samples", "seed"});
    maybe(j["sample"], "n_samples", cfg.n_samples);
    maybe(j["sample"], "seed", cfg.sample_seed);
  }
  if (j.contains("reweight")) {
    const auto& r = j["reweight"];
    check_keys(r, "$.reweight", {"clip_fraction", "mode", "target"});
    maybe(r, "clip_fraction", cfg.clip_fraction);
    if (r.contains("mode")) {
      const auto mode = r["mode"].get<std::string>();
      if (mode == "cap") {
        cfg.clip_cap = true;
      } else if (mode == "discard") {
        cfg.clip_cap = false;
      } else {
        throw ConfigError("$.reweight.mode: expected 'discard' or 'cap'");
      }
    }
    maybe(r, "target", cfg.reweight_target);
    if (cfg.reweight_target != "pmf" && cfg.reweight_target != "exact") {
      throw ConfigError("$.reweight.target: expected 'pmf' or 'exact'");
    }
  }
  if (j.contains("metrics")) {
    const auto& m = j["metrics"];
    check_keys(m, "$.metrics",
               {"bins", "range", "density_floor", "y_range", "n_quad", "n_boot",
                "boot_seed"});
    maybe(m, "bins", cfg.metric_bins);
    maybe(m, "range", cfg.metric_range);
    maybe(m, "density_floor", cfg.density_floor);
    maybe(m, "y_range", cfg.y_range);
    maybe(m, "n_quad", cfg.n_quad);
    maybe(m, "n_boot", cfg.n_boot);
    maybe(m, "boot_seed", cfg.boot_seed);
  }
  maybe(j, "out_dir", cfg.out_dir);

  // invariants
  if (!(cfg.thermo.kT > 0.0)) throw ConfigError("$.kT must be > 0");
  if (!(cfg.langevin.dt > 0.0) || !(cfg.langevin.mass > 0.0) ||
      cfg.langevin.gamma < 0.0 || !(cfg.langevin.kT > 0.0)) {
    throw ConfigError("$.langevin: need dt > 0, mass > 0, gamma >= 0, kT > 0");
  }
  if (cfg.trajectory.save_every < 1 ||
      cfg.trajectory.n_steps % cfg.trajectory.save_every != 0) {
    throw ConfigError("$.trajectory.save_every must divide n_steps");
  }
  if (cfg.trajectory.n_trajectories < 1) {
    throw ConfigError("$.trajectory.n_trajectories must be >= 1");
  }
  if (!(cfg.bias.width > 0.0)) throw ConfigError("$.bias.width must be > 0");
  if (!(cfg.clip_fraction >= 0.0 && cfg.clip_fraction < 0.5)) {
    throw ConfigError("$.reweight.clip_fraction must be in [0, 0.5)");
  }
  if (cfg.metric_bins < 1) throw ConfigError("$.metrics.bins must be >= 1");
  if (!(cfg.metric_range[1] > cfg.metric_range[0])) {
    throw ConfigError("$.metrics.range must be increasing");
  }
  if (!(cfg.pmf_train.split_ratio > 0.0 && cfg.pmf_train.split_ratio < 1.0)) {
    throw ConfigError("$.pmf_train.split_ratio must be in (0, 1)");
  }
  if (!(cfg.pmf_train.rbf.width > 0.0)) throw ConfigError("$.pmf_train.rbf.width must be > 0");
  for (int h : cfg.pmf_train.hidden) {
    if (h < 1) throw ConfigError("$.pmf_train.hidden widths must be >= 1");
  }
  for (int h : cfg.flow_train.hidden) {
    if (h < 1) throw ConfigError("$.flow_train.hidden widths must be >= 1");
  }
  if (cfg.flow_train.embed.dim < 2 || cfg.flow_train.embed.dim % 2 != 0) {
    throw ConfigError("$.flow_train.time_embedding.dim must be even and >= 2");
  }
  if (!(cfg.solver.atol > 0.0) || !(cfg.solver.rtol > 0.0)) {
    throw ConfigError("$.solver tolerances must be > 0");
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  const std::string text = io::read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path + " at " +
                      line_col(text, e.byte) + ": " + e.what());
  }
  return config_from_json(j);
}

namespace {

class RunWriter {
 public:
  RunWriter(const ExperimentConfig& cfg, std::string command, fs::path out_dir)
      : cfg_(cfg), command_(std::move(command)), out_(std::move(out_dir)),
        start_(std::chrono::steady_clock::now()) {
    fs::create_directories(out_);
    const std::string resolved = config_to_json(cfg_).dump(2) + "\n";
    io::write_text_file(out_ / "config.resolved.json", resolved);
    config_hash_ = hash_of_text(config_to_json(cfg_).dump());
    outputs_.push_back("config.resolved.json");
  }

  const fs::path& dir() const { return out_; }

  fs::path out_path(const std::string& name) {
    outputs_.push_back(name);
    return out_ / name;
  }

  void add_input(const fs::path& path) {
    inputs_[path.string()] = io::to_hex(io::crc32_file(path));
  }

  void mark(const std::string& phase) {
    const auto now = std::chrono::steady_clock::now();
    timings_[phase] =
        std::chrono::duration_cast<std::chrono::milliseconds>(now - last_).count();
    last_ = now;
  }

  void finish() {
    json m;
    m["tool_version"] = kVersion;
    m["command"] = command_;
    m["config_hash"] = config_hash_;
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    const auto total = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start_);
    timings_["total"] = total.count();
    m["timings_ms"] = timings_;
    io::write_text_file(out_ / "manifest.json", m.dump(2) + "\n");
  }

 private:
  const ExperimentConfig& cfg_;
  std::string command_;
  fs::path out_;
  std::string config_hash_;
  std::map<std::string, std::string> inputs_;
  std::vector<std::string> outputs_;
  std::map<std::string, std::int64_t> timings_;
  std::chrono::steady_clock::time_point start_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

Eigen::VectorXd linspace(double lo, double hi, Eigen::Index n) {
  return Eigen::VectorXd::LinSpaced(n, lo, hi);
}

Eigen::VectorXd metric_edges(const ExperimentConfig& cfg) {
  return linspace(cfg.metric_range[0], cfg.metric_range[1], cfg.metric_bins + 1);
}

int cmd_gen_data(const ExperimentConfig& cfg, const fs::path& out, int threads) {
  RunWriter run(cfg, "gen-data", out);
  std::optional<UmbrellaBias> bias;
  if (cfg.bias_enabled) bias = cfg.bias;
  const AtomisticDataset ds =
      simulate(cfg.langevin, cfg.trajectory, bias, cfg.potential, threads);
  run.mark("simulate");
  save_dataset(ds, run.out_path("atomistic.ds1"));
  const CGDataset cg = apply_mapping(ds, cfg.cg_mapping);
  save_cg_dataset(cg, run.out_path("cg.cg1"));
  run.mark("write");
  run.finish();
  std::cout << "gen-data: " << ds.records.size() << " records -> " << run.dir() << "\n";
  return 0;
}

int cmd_train_pmf(const ExperimentConfig& cfg, const fs::path& dataset,
                  const fs::path& out) {
  RunWriter run(cfg, "train-pmf", out);
  run.add_input(dataset);
  CGDataset ds = load_cg_dataset(dataset);
  if (cfg.standardize_pmf && !ds.standardizer.has_value()) {
    ds = standardize(ds, fit_standardizer(ds));
  }
  auto [model, history] = train_pmf(ds, cfg.pmf_train);
  run.mark("train");
  save_pmf_checkpoint(model, run.out_path("pmf.ckpt.json"));
  save_history_csv(history, run.out_path("pmf_history.csv"));
  const Eigen::VectorXd grid =
      linspace(cfg.metric_range[0], cfg.metric_range[1], 241);
  export_pmf_table_csv(model, grid, run.out_path("pmf_table.csv"));
  run.mark("write");
  run.finish();
  std::cout << "train-pmf: best epoch " << history.best_epoch << ", val loss "
            << history.best_val_loss << " -> " << run.dir() << "\n";
  return 0;
}

int cmd_train_flow(const ExperimentConfig& cfg, const fs::path& dataset,
                   const fs::path& out) {
  RunWriter run(cfg, "train-flow", out);
  run.add_input(dataset);
  CGDataset ds = load_cg_dataset(dataset);
  if (!ds.standardizer.has_value()) {
    if (!cfg.standardize_flow) {
      throw ConfigError("flow training requires a standardized dataset; enable "
                        "$.cg.standardize_flow or provide standardized data");
    }
    ds = standardize(ds, fit_standardizer(ds));
  }
  auto [model, history] = train_flow(ds, cfg.flow_train);
  run.mark("train");
  save_flow_checkpoint(model, run.out_path("flow.ckpt.json"));
  save_flow_history_csv(history, run.out_path("flow_history.csv"));
  run.mark("write");
  run.finish();
  std::cout << "train-flow: final loss "
            << (history.train_loss.empty() ? 0.0 : history.train_loss.back()) << " -> "
            << run.dir() << "\n";
  return 0;
}

int cmd_sample(const ExperimentConfig& cfg, const fs::path& checkpoint,
               const fs::path& out, int threads) {
  RunWriter run(cfg, "sample", out);
  run.add_input(checkpoint);
  const FlowModel model = load_flow_checkpoint(checkpoint);
  const FlowSampleBatch batch =
      sample_with_logdensity(model, cfg.n_samples, cfg.sample_seed, cfg.solver, threads);
  run.mark("sample");
  save_samples(batch, run.out_path("samples.smp1"));
  run.mark("write");
  run.finish();
  std::cout << "sample: " << batch.R.size() << " samples, " << batch.stats.n_accepted
            << " accepted / " << batch.stats.n_rejected << " rejected steps -> "
            << run.dir() << "\n";
  return 0;
}

int cmd_reweight(const ExperimentConfig& cfg, const fs::path& samples_path,
                 const std::optional<fs::path>& pmf_path, const fs::path& out) {
  RunWriter run(cfg, "reweight", out);
  run.add_input(samples_path);
  const FlowSampleBatch samples = load_samples(samples_path);
  Eigen::VectorXd energies(samples.R.size());
  if (cfg.reweight_target == "exact") {
    for (Eigen::Index i = 0; i < samples.R.size(); ++i) {
      energies[i] = exact_pmf_at(cfg.thermo, samples.R[i], cfg.y_range, cfg.n_quad,
                                 cfg.potential, nullptr);
    }
  } else {
    if (!pmf_path.has_value()) {
      throw ConfigError("reweight with target 'pmf' requires --pmf CHECKPOINT");
    }
    run.add_input(*pmf_path);
    const PMFModel pmf = load_pmf_checkpoint(*pmf_path);
    energies = pmf_energy(pmf, samples.R);
  }
  run.mark("energies");
  const ClipPolicy policy{cfg.clip_fraction, cfg.clip_cap};
  const WeightedEnsemble ens =
      make_ensemble(samples.R, samples.log_q, energies, cfg.thermo, policy);
  save_ensemble(ens, run.out_path("ensemble.ens1"));
  export_ensemble_csv(ens, run.out_path("ensemble.csv"));
  run.mark("write");
  run.finish();
  std::cout << "reweight: ess_norm " << ens.ess_norm << " over " << ens.n_survivors
            << " survivors -> " << run.dir() << "\n";
  return 0;
}

struct EvalArtifacts {
  MetricReport report;
  Histogram1D sample_hist;
  Histogram1D ref_hist;
  FreeEnergyProfile sample_profile;
  FreeEnergyProfile ref_profile;
};

EvalArtifacts evaluate_ensemble(const ExperimentConfig& cfg, const WeightedEnsemble& ens) {
  EvalArtifacts art;
  const Eigen::VectorXd edges = metric_edges(cfg);
  art.sample_hist = weighted_histogram(ens.R, &ens.weights, edges);
  const Eigen::VectorXd ref_mass = boltzmann_x_bin_masses(
      cfg.thermo, edges, cfg.potential, nullptr, cfg.y_range, 512, 16);
  art.ref_hist = histogram_from_masses(edges, ref_mass);
  art.sample_profile = free_energy_profile(art.sample_hist, cfg.thermo, cfg.density_floor);
  art.ref_profile = free_energy_profile(art.ref_hist, cfg.thermo, cfg.density_floor);
  art.report.js = js_divergence(art.sample_hist, art.ref_hist);
  art.report.pmf_error = pmf_error(art.sample_profile, art.ref_profile);
  art.report.ess_abs = ens.ess_abs;
  art.report.ess_norm = ens.ess_norm;
  art.report.ess_norm_over_total =
      ens.R.size() > 0 ? ens.ess_abs / static_cast<double>(ens.R.size()) : 0.0;
  art.report.n_samples = ens.R.size();
  art.report.n_survivors = ens.n_survivors;

  // Bootstrap over survivors: resample, rebuild the weighted histogram,
  // recompute both metrics per replicate.
  std::vector<Eigen::Index> survivors;
  for (Eigen::Index i = 0; i < ens.R.size(); ++i) {
    if (ens.keep[static_cast<std::size_t>(i)] != 0) survivors.push_back(i);
  }
  const std::size_t n = survivors.size();
  std::vector<double> js_reps, pmf_reps;
  js_reps.reserve(static_cast<std::size_t>(cfg.n_boot));
  pmf_reps.reserve(static_cast<std::size_t>(cfg.n_boot));
  Eigen::VectorXd r_rep(static_cast<Eigen::Index>(n));
  Eigen::VectorXd w_rep(static_cast<Eigen::Index>(n));
  for (int b = 0; b < cfg.n_boot; ++b) {
    Rng rng = Rng::substream(cfg.boot_seed, static_cast<std::uint64_t>(b));
    for (std::size_t k = 0; k < n; ++k) {
      const auto pick = survivors[static_cast<std::size_t>(rng.below(n))];
      r_rep[static_cast<Eigen::Index>(k)] = ens.R[pick];
      w_rep[static_cast<Eigen::Index>(k)] = ens.weights[pick];
    }
    const Histogram1D h = weighted_histogram(r_rep, &w_rep, edges);
    js_reps.push_back(js_divergence(h, art.ref_hist));
    try {
      const FreeEnergyProfile p = free_energy_profile(h, cfg.thermo, cfg.density_floor);
      pmf_reps.push_back(pmf_error(p, art.ref_profile));
    } catch (const NoOverlap&) {
      // degenerate replicate; skip
    }
  }
  auto std_of = [](const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return std::sqrt(var / static_cast<double>(v.size() - 1));
  };
  art.report.js_std = std_of(js_reps);
  art.report.pmf_error_std = std_of(pmf_reps);
  return art;
}

int cmd_evaluate(const ExperimentConfig& cfg, const fs::path& ensemble_path,
                 const fs::path& out) {
  RunWriter run(cfg, "evaluate", out);
  run.add_input(ensemble_path);
  const WeightedEnsemble ens = load_ensemble(ensemble_path);
  const EvalArtifacts art = evaluate_ensemble(cfg, ens);
  run.mark("evaluate");
  io::write_text_file(run.out_path("metrics.json"), art.report.to_json().dump(2) + "\n");
  save_histogram_csv(art.sample_hist, run.out_path("sample_hist.csv"));
  save_histogram_csv(art.ref_hist, run.out_path("reference_hist.csv"));
  save_profile_csv(art.sample_profile, run.out_path("sample_profile.csv"));
  save_profile_csv(art.ref_profile, run.out_path("reference_profile.csv"));
  run.mark("write");
  run.finish();
  std::cout << "evaluate: js " << art.report.js << ", pmf_error " << art.report.pmf_error
            << ", ess_norm " << art.report.ess_norm << " -> " << run.dir() << "\n";
  return 0;
}

int cmd_report(const ExperimentConfig& cfg, const fs::path& run_dir, const fs::path& out) {
  RunWriter run(cfg, "report", out);
  const fs::path ens_path = run_dir / "ensemble.ens1";
  if (!fs::exists(ens_path)) {
    throw IOError("report: missing " + ens_path.string());
  }
  run.add_input(ens_path);
  const WeightedEnsemble ens = load_ensemble(ens_path);
  const Eigen::VectorXd edges = metric_edges(cfg);

  // Proposal (unweighted), reweighted, and reference profiles.
  const Histogram1D proposal_hist = weighted_histogram(ens.R, nullptr, edges);
  const Histogram1D reweighted_hist = weighted_histogram(ens.R, &ens.weights, edges);
  const Eigen::VectorXd ref_mass = boltzmann_x_bin_masses(
      cfg.thermo, edges, cfg.potential, nullptr, cfg.y_range, 512, 16);
  const Histogram1D ref_hist = histogram_from_masses(edges, ref_mass);
  const FreeEnergyProfile fp = free_energy_profile(proposal_hist, cfg.thermo, cfg.density_floor);
  const FreeEnergyProfile fr = free_energy_profile(reweighted_hist, cfg.thermo, cfg.density_floor);
  const FreeEnergyProfile fx = free_energy_profile(ref_hist, cfg.thermo, cfg.density_floor);
  auto masked = [](const FreeEnergyProfile& p) {
    Eigen::VectorXd y = p.F;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (p.valid[static_cast<std::size_t>(i)] == 0) y[i] = std::nan("");
    }
    return y;
  };
  svg_line_plot(run.out_path("profiles.svg"), "Free energy profiles", "R", "F [kT]",
                {{"proposal", fp.centers, masked(fp)},
                 {"reweighted", fr.centers, masked(fr)},
                 {"reference", fx.centers, masked(fx)}});
  save_profile_csv(fp, run.out_path("proposal_profile.csv"));
  save_profile_csv(fr, run.out_path("reweighted_profile.csv"));
  save_profile_csv(fx, run.out_path("reference_profile.csv"));

  // Clip sweep on the stored log-weights.
  const std::vector<double> fractions{0.0, 0.001, 0.01, 0.05, 0.1, 0.2};
  std::ostringstream sweep;
  sweep.precision(17);
  sweep << "clip_fraction,ess_norm,ess_abs,n_survivors\n";
  Eigen::VectorXd xs(static_cast<Eigen::Index>(fractions.size()));
  Eigen::VectorXd ys(static_cast<Eigen::Index>(fractions.size()));
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const auto keep = clip(ens.log_w, ClipPolicy{fractions[i], false});
    const Eigen::VectorXd w = normalize(ens.log_w, keep);
    Eigen::Index n_surv = 0;
    for (auto k : keep) n_surv += k;
    Eigen::VectorXd sw(n_surv);
    Eigen::Index jj = 0;
    for (Eigen::Index k = 0; k < w.size(); ++k) {
      if (keep[static_cast<std::size_t>(k)] != 0) sw[jj++] = w[k];
    }
    const auto [abs, norm] = ess(sw);
    sweep << fractions[i] << "," << norm << "," << abs << "," << n_surv << "\n";
    xs[static_cast<Eigen::Index>(i)] = fractions[i];
    ys[static_cast<Eigen::Index>(i)] = norm;
  }
  io::write_text_file(run.out_path("clip_sweep.csv"), sweep.str());
  svg_line_plot(run.out_path("clip_sweep.svg"), "ESS vs clip fraction", "clip fraction",
                "normalized ESS", {{"ess_norm", xs, ys}});

  // Carry forward the artifact listing of the source run.
  json listing;
  listing["source_run"] = run_dir.string();
  const fs::path src_manifest = run_dir / "manifest.json";
  if (fs::exists(src_manifest)) {
    listing["source_manifest"] = json::parse(io::read_text_file(src_manifest));
  }
  io::write_text_file(run.out_path("artifacts.json"), listing.dump(2) + "\n");
  run.mark("report");
  run.finish();
  std::cout << "report -> " << run.dir() << "\n";
  return 0;
}

fs::path default_out(const ExperimentConfig& cfg, const std::string& sub) {
  const char* env = std::getenv("CGBG_OUT");
  const fs::path root = env != nullptr ? fs::path(env) : fs::path(cfg.out_dir);
  return root / sub;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Coarse-grained Boltzmann generator workbench"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  int threads = 1;
  std::int64_t seed_override = -1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config JSON");
    sub->add_option("--out", out_override, "output directory");
    sub->add_option("--seed", seed_override, "override the command's seed");
    sub->add_option("--threads", threads, "worker cap (1 = bitwise deterministic)");
  };

  auto* gen = app.add_subcommand("gen-data", "simulate Langevin data and coarse-grain it");
  std::string bias_flag;
  std::int64_t steps_override = -1;
  int traj_override = -1;
  add_common(gen);
  gen->add_option("--bias", bias_flag, "umbrella | none (overrides config)");
  gen->add_option("--steps", steps_override, "override trajectory.n_steps");
  gen->add_option("--trajectories", traj_override, "override trajectory.n_trajectories");

  auto* tpmf = app.add_subcommand("train-pmf", "train the CG PMF by force matching");
  std::string dataset_path;
  int epochs_override = -1;
  add_common(tpmf);
  tpmf->add_option("--dataset", dataset_path, "CG dataset (.cg1)")->required();
  tpmf->add_option("--epochs", epochs_override, "override pmf_train.epochs");

  auto* tflow = app.add_subcommand("train-flow", "train the CNF proposal by flow matching");
  add_common(tflow);
  tflow->add_option("--dataset", dataset_path, "CG dataset (.cg1)")->required();
  tflow->add_option("--epochs", epochs_override, "override flow_train.epochs");

  auto* smp = app.add_subcommand("sample", "draw flow samples with exact log-density");
  std::string ckpt_path;
  int n_override = -1;
  add_common(smp);
  smp->add_option("--checkpoint", ckpt_path, "flow checkpoint")->required();
  smp->add_option("--n", n_override, "override sample.n_samples");

  auto* rw = app.add_subcommand("reweight", "importance weights, clipping, ESS");
  std::string samples_path;
  std::string pmf_path;
  std::string target_override;
  double clip_override = -1.0;
  add_common(rw);
  rw->add_option("--samples", samples_path, "sample batch (.smp1)")->required();
  rw->add_option("--pmf", pmf_path, "PMF checkpoint (target 'pmf')");
  rw->add_option("--target", target_override, "pmf | exact (overrides config)");
  rw->add_option("--clip", clip_override, "override reweight.clip_fraction");

  auto* ev = app.add_subcommand("evaluate", "JS, PMF error, ESS against the reference");
  std::string ensemble_path;
  add_common(ev);
  ev->add_option("--ensemble", ensemble_path, "weighted ensemble (.ens1)")->required();

  auto* rep = app.add_subcommand("report", "CSV/SVG bundle for a finished run");
  std::string run_dir;
  add_common(rep);
  rep->add_option("--run", run_dir, "run directory holding ensemble.ens1")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    ExperimentConfig cfg =
        config_path.empty() ? ExperimentConfig{} : load_config_file(config_path);

    if (gen->parsed()) {
      if (seed_override >= 0) cfg.trajectory.seed = static_cast<std::uint64_t>(seed_override);
      if (steps_override > 0) cfg.trajectory.n_steps = steps_override;
      if (traj_override > 0) cfg.trajectory.n_trajectories = traj_override;
      if (!bias_flag.empty()) {
        if (bias_flag == "umbrella") {
          cfg.bias_enabled = true;
        } else if (bias_flag == "none") {
          cfg.bias_enabled = false;
        } else {
          throw ConfigError("--bias expects 'umbrella' or 'none'");
        }
      }
      const fs::path out = out_override.empty() ? default_out(cfg, "gen") : fs::path(out_override);
      return cmd_gen_data(cfg, out, threads);
    }
    if (tpmf->parsed()) {
      if (seed_override >= 0) cfg.pmf_train.seed = static_cast<std::uint64_t>(seed_override);
      if (epochs_override > 0) cfg.pmf_train.epochs = epochs_override;
      const fs::path out = out_override.empty() ? default_out(cfg, "pmf") : fs::path(out_override);
      return cmd_train_pmf(cfg, dataset_path, out);
    }
    if (tflow->parsed()) {
      if (seed_override >= 0) cfg.flow_train.seed = static_cast<std::uint64_t>(seed_override);
      if (epochs_override > 0) cfg.flow_train.epochs = epochs_override;
      const fs::path out = out_override.empty() ? default_out(cfg, "flow") : fs::path(out_override);
      return cmd_train_flow(cfg, dataset_path, out);
    }
    if (smp->parsed()) {
      if (seed_override >= 0) cfg.sample_seed = static_cast<std::uint64_t>(seed_override);
      if (n_override > 0) cfg.n_samples = n_override;
      const fs::path out = out_override.empty() ? default_out(cfg, "sample") : fs::path(out_override);
      return cmd_sample(cfg, ckpt_path, out, threads);
    }
    if (rw->parsed()) {
      if (!target_override.empty()) {
        if (target_override != "pmf" && target_override != "exact") {
          throw ConfigError("--target expects 'pmf' or 'exact'");
        }
        cfg.reweight_target = target_override;
      }
      if (clip_override >= 0.0) cfg.clip_fraction = clip_override;
      std::optional<fs::path> pmf;
      if (!pmf_path.empty()) pmf = fs::path(pmf_path);
      const fs::path out = out_override.empty() ? default_out(cfg, "reweight") : fs::path(out_override);
      return cmd_reweight(cfg, samples_path, pmf, out);
    }
    if (ev->parsed()) {
      const fs::path out = out_override.empty() ? default_out(cfg, "evaluate") : fs::path(out_override);
      return cmd_evaluate(cfg, ensemble_path, out);
    }
    if (rep->parsed()) {
      const fs::path out = out_override.empty() ? fs::path(run_dir) / "report" : fs::path(out_override);
      return cmd_report(cfg, run_dir, out);
    }
    throw ConfigError("no subcommand selected");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const IOError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  args.reserve(static_cast<std::size_t>(argc > 0 ? argc - 1 : 0));
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace cgbg::cli
