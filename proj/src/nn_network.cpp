// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#include "cgbg/nn/network.hpp"

namespace cgbg::nn {

Eigen::MatrixXd time_embedding(const TimeEmbeddingSpec& spec, const Eigen::VectorXd& t) {
  if (spec.dim < 2 || spec.dim % 2 != 0) throw Error("time embedding dim must be even, >= 2");
  const int pairs = spec.dim / 2;
  Eigen::MatrixXd e(spec.dim, t.size());
  for (int k = 0; k < pairs; ++k) {
    const double frac = pairs == 1 ? 0.0 : static_cast<double>(k) / (pairs - 1);
    const double omega = spec.omega_min * std::pow(spec.omega_max / spec.omega_min, frac);
    for (Eigen::Index j = 0; j < t.size(); ++j) {
      e(2 * k, j) = std::sin(omega * t[j]);
      e(2 * k + 1, j) = std::cos(omega * t[j]);
    }
  }
  return e;
}

void mlp_append_layout(const MLPSpec& spec, const std::string& prefix, ParamLayout& layout) {
  const auto w = spec.widths();
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    layout.add(prefix + "W" + std::to_string(l), w[l + 1], w[l]);
    layout.add(prefix + "b" + std::to_string(l), w[l + 1], 1);
  }
}

void mlp_init(const MLPSpec& spec, const std::string& prefix, ParamVector& params,
              Rng& rng) {
  const auto w = spec.widths();
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    const double s = 1.0 / std::sqrt(static_cast<double>(w[l]));
    auto W = params.view(prefix + "W" + std::to_string(l));
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
      for (Eigen::Index i = 0; i < W.rows(); ++i) W(i, j) = rng.uniform(-s, s);
    }
    auto b = params.view(prefix + "b" + std::to_string(l));
    for (Eigen::Index i = 0; i < b.rows(); ++i) b(i, 0) = rng.uniform(-s, s);
  }
}

Mat mlp_forward(const MLPSpec& spec, const std::string& prefix, const ParamVector& params,
                const Mat& x) {
  if (x.rows() != spec.input) {
    throw ShapeMismatch("MLP input rows " + std::to_string(x.rows()) + " != spec width " +
                        std::to_string(spec.input));
  }
  const auto w = spec.widths();
  Mat h = x;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    Mat a = params.view(prefix + "W" + std::to_string(l)) * h;
    a.colwise() += Eigen::VectorXd(params.view(prefix + "b" + std::to_string(l)).col(0));
    const bool last = (l + 2 == w.size());
    h = (last && spec.final_linear) ? std::move(a) : act_value(spec.activation, a);
  }
  return h;
}

void mlp_forward_tangent(const MLPSpec& spec, const std::string& prefix,
                         const ParamVector& params, const Mat& x, const Mat& xdot,
                         Mat& y, Mat& ydot) {
  if (x.rows() != spec.input) throw ShapeMismatch("MLP input width mismatch");
  const auto w = spec.widths();
  Mat h = x;
  Mat hdot = xdot;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    const auto W = params.view(prefix + "W" + std::to_string(l));
    Mat a = W * h;
    a.colwise() += Eigen::VectorXd(params.view(prefix + "b" + std::to_string(l)).col(0));
    Mat adot = W * hdot;
    const bool last = (l + 2 == w.size());
    if (last && spec.final_linear) {
      h = std::move(a);
      hdot = std::move(adot);
    } else {
      h = act_value(spec.activation, a);
      hdot = (act_deriv(spec.activation, a).array() * adot.array()).matrix();
    }
  }
  y = std::move(h);
  ydot = std::move(hdot);
}

void rbf_append_layout(const RBFLayerSpec& spec, const std::string& prefix,
                       ParamLayout& layout) {
  layout.add(prefix + "centers", spec.n_centers, 1);
}

void rbf_init(const RBFLayerSpec& spec, const std::string& prefix, ParamVector& params,
              Rng& rng) {
  auto c = params.view(prefix + "centers");
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    c(i, 0) = rng.uniform(spec.init_lo, spec.init_hi);
  }
}

Mat rbf_forward(const RBFLayerSpec& spec, const std::string& prefix,
                const ParamVector& params, const Mat& r) {
  if (r.rows() != 1) throw ShapeMismatch("RBF layer expects a 1 x batch input");
  const auto c = params.view(prefix + "centers");
  const double inv2s2 = 1.0 / (2.0 * spec.width * spec.width);
  Mat phi(spec.n_centers, r.cols());
  for (Eigen::Index j = 0; j < r.cols(); ++j) {
    for (Eigen::Index k = 0; k < c.rows(); ++k) {
      const double d = r(0, j) - c(k, 0);
      phi(k, j) = std::exp(-d * d * inv2s2);
    }
  }
  return phi;
}

void rbf_forward_tangent(const RBFLayerSpec& spec, const std::string& prefix,
                         const ParamVector& params, const Mat& r, Mat& phi, Mat& phidot) {
  if (r.rows() != 1) throw ShapeMismatch("RBF layer expects a 1 x batch input");
  const auto c = params.view(prefix + "centers");
  const double inv_s2 = 1.0 / (spec.width * spec.width);
  phi.resize(spec.n_centers, r.cols());
  phidot.resize(spec.n_centers, r.cols());
  for (Eigen::Index j = 0; j < r.cols(); ++j) {
    for (Eigen::Index k = 0; k < c.rows(); ++k) {
      const double d = r(0, j) - c(k, 0);
      const double v = std::exp(-0.5 * d * d * inv_s2);
      phi(k, j) = v;
      phidot(k, j) = -d * inv_s2 * v;
    }
  }
}

TapeParams make_tape_params(Tape& tape, const ParamVector& params) {
  TapeParams tp;
  tp.layout = &params.layout;
  tp.ids.reserve(params.layout.entries().size());
  for (const auto& e : params.layout.entries()) {
    Mat v = Eigen::Map<const Mat>(params.data.data() + e.offset, e.rows, e.cols);
    tp.ids.push_back(tape.leaf(std::move(v), true));
  }
  return tp;
}

void collect_param_grads(const Tape& tape, const TapeParams& tp, Eigen::VectorXd& grad) {
  grad.resize(tp.layout->size());
  const auto& entries = tp.layout->entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Mat g = tape.grad(tp.ids[i]);
    Eigen::Map<Mat>(grad.data() + entries[i].offset, entries[i].rows, entries[i].cols) = g;
  }
}

int mlp_build(Tape& tape, const MLPSpec& spec, const std::string& prefix,
              const TapeParams& tp, int x_id) {
  if (tape.value(x_id).rows() != spec.input) throw ShapeMismatch("MLP input width mismatch");
  const auto w = spec.widths();
  int h = x_id;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    const int a = tape.add_col(tape.matmul(tp.id(prefix + "W" + std::to_string(l)), h),
                               tp.id(prefix + "b" + std::to_string(l)));
    const bool last = (l + 2 == w.size());
    h = (last && spec.final_linear) ? a : tape.apply(a, spec.activation);
  }
  return h;
}

std::pair<int, int> mlp_build_tangent(Tape& tape, const MLPSpec& spec,
                                      const std::string& prefix, const TapeParams& tp,
                                      int x_id, int xdot_id) {
  if (tape.value(x_id).rows() != spec.input) throw ShapeMismatch("MLP input width mismatch");
  const auto w = spec.widths();
  int h = x_id;
  int hdot = xdot_id;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    const int wid = tp.id(prefix + "W" + std::to_string(l));
    const int a = tape.add_col(tape.matmul(wid, h), tp.id(prefix + "b" + std::to_string(l)));
    const int adot = tape.matmul(wid, hdot);
    const bool last = (l + 2 == w.size());
    if (last && spec.final_linear) {
      h = a;
      hdot = adot;
    } else {
      h = tape.apply(a, spec.activation);
      hdot = tape.hadamard(tape.apply_deriv(a, spec.activation), adot);
    }
  }
  return {h, hdot};
}

int rbf_build(Tape& tape, const RBFLayerSpec& spec, const std::string& prefix,
              const TapeParams& tp, int r_id) {
  const int d = tape.outer_sub(r_id, tp.id(prefix + "centers"));
  const int e = tape.scale(tape.hadamard(d, d), -1.0 / (2.0 * spec.width * spec.width));
  return tape.apply(e, Act::Exp);
}

std::pair<int, int> rbf_build_tangent(Tape& tape, const RBFLayerSpec& spec,
                                      const std::string& prefix, const TapeParams& tp,
                                      int r_id) {
  const int d = tape.outer_sub(r_id, tp.id(prefix + "centers"));
  const int e = tape.scale(tape.hadamard(d, d), -1.0 / (2.0 * spec.width * spec.width));
  const int phi = tape.apply(e, Act::Exp);
  const int phidot = tape.hadamard(phi, tape.scale(d, -1.0 / (spec.width * spec.width)));
  return {phi, phidot};
}

}  // namespace cgbg::nn
