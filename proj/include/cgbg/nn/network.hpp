// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "cgbg/nn/tape.hpp"
#include "cgbg/rng.hpp"

namespace cgbg::nn {

struct ParamEntry {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;

  Eigen::Index size() const { return rows * cols; }
};

// Flat 64-bit parameter array with a named-slice layout. Slices cover the
// array exactly and never overlap.
class ParamLayout {
 public:
  Eigen::Index add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    entries_.push_back({name, total_, rows, cols});
    total_ += rows * cols;
    return total_;
  }

  const ParamEntry& at(const std::string& name) const {
    for (const auto& e : entries_) {
      if (e.name == name) return e;
    }
    throw Error("no parameter slice named " + name);
  }

  const std::vector<ParamEntry>& entries() const { return entries_; }
  Eigen::Index size() const { return total_; }

 private:
  std::vector<ParamEntry> entries_;
  Eigen::Index total_ = 0;
};

struct ParamVector {
  ParamLayout layout;
  Eigen::VectorXd data;

  static ParamVector zeros(ParamLayout layout) {
    ParamVector p;
    p.data = Eigen::VectorXd::Zero(layout.size());
    p.layout = std::move(layout);
    return p;
  }

  Eigen::Map<const Mat> view(const std::string& name) const {
    const ParamEntry& e = layout.at(name);
    return Eigen::Map<const Mat>(data.data() + e.offset, e.rows, e.cols);
  }

  Eigen::Map<Mat> view(const std::string& name) {
    const ParamEntry& e = layout.at(name);
    return Eigen::Map<Mat>(data.data() + e.offset, e.rows, e.cols);
  }
};

struct MLPSpec {
  int input = 1;
  std::vector<int> hidden;
  int output = 1;
  Act activation = Act::Softplus;
  bool final_linear = true;

  std::vector<int> widths() const {
    std::vector<int> w;
    w.push_back(input);
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(output);
    return w;
  }
};

struct RBFLayerSpec {
  int n_centers = 100;
  double width = 5.0;      // fixed scale sigma
  double init_lo = 10.0;   // center initialization interval
  double init_hi = 50.0;
};

struct TimeEmbeddingSpec {
  int dim = 16;
  double omega_min = M_PI;
  double omega_max = 100.0 * M_PI;
};

// Sinusoidal features [sin(w_k t); cos(w_k t)] at geometrically spaced
// frequencies; injective on [0, 1] because the slowest pair advances less
// than a full turn.
Eigen::MatrixXd time_embedding(const TimeEmbeddingSpec& spec, const Eigen::VectorXd& t);

void mlp_append_layout(const MLPSpec& spec, const std::string& prefix, ParamLayout& layout);
void mlp_init(const MLPSpec& spec, const std::string& prefix, ParamVector& params, Rng& rng);

// Dense forward pass, features x batch. Throws ShapeMismatch on a wrong
// input width.
Mat mlp_forward(const MLPSpec& spec, const std::string& prefix, const ParamVector& params,
                const Mat& x);

// Forward pass carrying a directional input derivative alongside the values.
void mlp_forward_tangent(const MLPSpec& spec, const std::string& prefix,
                         const ParamVector& params, const Mat& x, const Mat& xdot,
                         Mat& y, Mat& ydot);

void rbf_append_layout(const RBFLayerSpec& spec, const std::string& prefix,
                       ParamLayout& layout);
void rbf_init(const RBFLayerSpec& spec, const std::string& prefix, ParamVector& params,
              Rng& rng);
Mat rbf_forward(const RBFLayerSpec& spec, const std::string& prefix,
                const ParamVector& params, const Mat& r);
void rbf_forward_tangent(const RBFLayerSpec& spec, const std::string& prefix,
                         const ParamVector& params, const Mat& r, Mat& phi, Mat& phidot);

// Tape-side mirror of ParamVector: one leaf per layout slice.
struct TapeParams {
  const ParamLayout* layout = nullptr;
  std::vector<int> ids;  // aligned with layout->entries()

  int id(const std::string& name) const {
    const auto& entries = layout->entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].name == name) return ids[i];
    }
    throw Error("no tape parameter named " + name);
  }
};

TapeParams make_tape_params(Tape& tape, const ParamVector& params);
void collect_param_grads(const Tape& tape, const TapeParams& tp, Eigen::VectorXd& grad);

int mlp_build(Tape& tape, const MLPSpec& spec, const std::string& prefix,
              const TapeParams& tp, int x_id);
std::pair<int, int> mlp_build_tangent(Tape& tape, const MLPSpec& spec,
                                      const std::string& prefix, const TapeParams& tp,
                                      int x_id, int xdot_id);
int rbf_build(Tape& tape, const RBFLayerSpec& spec, const std::string& prefix,
              const TapeParams& tp, int r_id);
// Returns (phi, dphi/dR) node ids; the tangent seed over R is implicit (= 1).
std::pair<int, int> rbf_build_tangent(Tape& tape, const RBFLayerSpec& spec,
                                      const std::string& prefix, const TapeParams& tp,
                                      int r_id);

// Reverse-mode gradient of a scalar loss built on a fresh tape.
// BuildFn: int(Tape&, const TapeParams&) returning the loss node id.
template <typename BuildFn>
double value_and_grad(const ParamVector& params, BuildFn&& build, Eigen::VectorXd& grad) {
  Tape tape;
  TapeParams tp = make_tape_params(tape, params);
  const int loss_id = build(tape, tp);
  if (tape.value(loss_id).size() != 1) throw ShapeMismatch("loss must be scalar");
  const double value = tape.value(loss_id)(0, 0);
  if (!std::isfinite(value)) throw NonFiniteLoss("loss is not finite");
  tape.backward(loss_id);
  collect_param_grads(tape, tp, grad);
  return value;
}

}  // namespace cgbg::nn
