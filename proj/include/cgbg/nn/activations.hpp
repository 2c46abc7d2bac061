// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "cgbg/errors.hpp"

namespace cgbg::nn {

using Mat = Eigen::MatrixXd;

enum class Act { Softplus, Tanh, Gelu, Sigmoid, Exp };

// Scalar closed forms. Second derivatives are needed because input-tangent
// passes place f'(a) on the tape, and reverse mode then differentiates it.
inline double sigmoid_s(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softplus_s(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double gauss_pdf_s(double x) {
  return std::exp(-0.5 * x * x) * 0.3989422804014326779;  // 1/sqrt(2 pi)
}

inline double gauss_cdf_s(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

inline double act_value_s(Act k, double x) {
  switch (k) {
    case Act::Softplus: return softplus_s(x);
    case Act::Tanh: return std::tanh(x);
    case Act::Gelu: return x * gauss_cdf_s(x);
    case Act::Sigmoid: return sigmoid_s(x);
    case Act::Exp: return std::exp(x);
  }
  throw Error("unknown activation");
}

inline double act_deriv_s(Act k, double x) {
  switch (k) {
    case Act::Softplus: return sigmoid_s(x);
    case Act::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Act::Gelu: return gauss_cdf_s(x) + x * gauss_pdf_s(x);
    case Act::Sigmoid: {
      const double s = sigmoid_s(x);
      return s * (1.0 - s);
    }
    case Act::Exp: return std::exp(x);
  }
  throw Error("unknown activation");
}

inline double act_deriv2_s(Act k, double x) {
  switch (k) {
    case Act::Softplus: {
      const double s = sigmoid_s(x);
      return s * (1.0 - s);
    }
    case Act::Tanh: {
      const double t = std::tanh(x);
      return -2.0 * t * (1.0 - t * t);
    }
    case Act::Gelu: return (2.0 - x * x) * gauss_pdf_s(x);
    case Act::Sigmoid: {
      const double s = sigmoid_s(x);
      return s * (1.0 - s) * (1.0 - 2.0 * s);
    }
    case Act::Exp: return std::exp(x);
  }
  throw Error("unknown activation");
}

inline Mat act_value(Act k, const Mat& x) {
  return x.unaryExpr([k](double v) { return act_value_s(k, v); });
}

inline Mat act_deriv(Act k, const Mat& x) {
  return x.unaryExpr([k](double v) { return act_deriv_s(k, v); });
}

inline Mat act_deriv2(Act k, const Mat& x) {
  return x.unaryExpr([k](double v) { return act_deriv2_s(k, v); });
}

}  // namespace cgbg::nn
