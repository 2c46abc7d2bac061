// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "cgbg/nn/activations.hpp"

namespace cgbg::nn {

// Reverse-mode tape over dense matrices. Nodes are created in topological
// order, so the backward sweep is a reverse iteration over ids. Matrices are
// laid out features x batch.
class Tape {
 public:
  int leaf(Mat value, bool needs_grad = false) {
    return push(std::move(value), needs_grad, {});
  }

  const Mat& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

  // Gradient of the last backward() root with respect to node id; zero matrix
  // if the node received no contribution.
  Mat grad(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) return Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  // value = A * B
  int matmul(int a, int b) {
    const int id = push(value(a) * value(b), needs(a) || needs(b), [this, a, b](const Mat& g) {
      if (needs(a)) accum(a, g * value(b).transpose());
      if (needs(b)) accum(b, value(a).transpose() * g);
    });
    return id;
  }

  int add(int a, int b) {
    return push(value(a) + value(b), needs(a) || needs(b), [this, a, b](const Mat& g) {
      if (needs(a)) accum(a, g);
      if (needs(b)) accum(b, g);
    });
  }

  int sub(int a, int b) {
    return push(value(a) - value(b), needs(a) || needs(b), [this, a, b](const Mat& g) {
      if (needs(a)) accum(a, g);
      if (needs(b)) accum(b, -g);
    });
  }

  int hadamard(int a, int b) {
    return push((value(a).array() * value(b).array()).matrix(), needs(a) || needs(b),
                [this, a, b](const Mat& g) {
                  if (needs(a)) accum(a, (g.array() * value(b).array()).matrix());
                  if (needs(b)) accum(b, (g.array() * value(a).array()).matrix());
                });
  }

  int scale(int a, double s) {
    return push(value(a) * s, needs(a), [this, a, s](const Mat& g) {
      if (needs(a)) accum(a, g * s);
    });
  }

  // X (r x B) plus a column vector b (r x 1) broadcast over the batch.
  int add_col(int x, int b) {
    Mat v = value(x);
    v.colwise() += Eigen::VectorXd(value(b).col(0));
    return push(std::move(v), needs(x) || needs(b), [this, x, b](const Mat& g) {
      if (needs(x)) accum(x, g);
      if (needs(b)) accum(b, g.rowwise().sum());
    });
  }

  // row (1 x B) minus col (K x 1): value(k, j) = row(j) - col(k).
  int outer_sub(int row, int col) {
    const Mat& r = value(row);
    const Mat& c = value(col);
    Mat v(c.rows(), r.cols());
    for (Eigen::Index j = 0; j < r.cols(); ++j) {
      v.col(j) = Eigen::VectorXd::Constant(c.rows(), r(0, j)) - c.col(0);
    }
    return push(std::move(v), needs(row) || needs(col), [this, row, col](const Mat& g) {
      if (needs(row)) accum(row, g.colwise().sum());
      if (needs(col)) accum(col, -g.rowwise().sum());
    });
  }

  int apply(int x, Act k) {
    return push(act_value(k, value(x)), needs(x), [this, x, k](const Mat& g) {
      if (needs(x)) accum(x, (g.array() * act_deriv(k, value(x)).array()).matrix());
    });
  }

  // f'(x) as a first-class node; its pullback uses f''.
  int apply_deriv(int x, Act k) {
    return push(act_deriv(k, value(x)), needs(x), [this, x, k](const Mat& g) {
      if (needs(x)) accum(x, (g.array() * act_deriv2(k, value(x)).array()).matrix());
    });
  }

  int concat_rows(int top, int bottom) {
    const Mat& t = value(top);
    const Mat& b = value(bottom);
    Mat v(t.rows() + b.rows(), t.cols());
    v.topRows(t.rows()) = t;
    v.bottomRows(b.rows()) = b;
    return push(std::move(v), needs(top) || needs(bottom),
                [this, top, bottom](const Mat& g) {
                  const auto nt = value(top).rows();
                  if (needs(top)) accum(top, g.topRows(nt));
                  if (needs(bottom)) accum(bottom, g.bottomRows(g.rows() - nt));
                });
  }

  // Mean over all entries, as a 1x1 node.
  int mean_all(int x) {
    Mat v(1, 1);
    v(0, 0) = value(x).mean();
    const double inv = 1.0 / static_cast<double>(value(x).size());
    return push(std::move(v), needs(x), [this, x, inv](const Mat& g) {
      if (needs(x)) {
        accum(x, Mat::Constant(value(x).rows(), value(x).cols(), g(0, 0) * inv));
      }
    });
  }

  void backward(int root) {
    Node& r = nodes_[static_cast<std::size_t>(root)];
    if (r.value.size() != 1) throw ShapeMismatch("backward root must be scalar");
    r.grad = Mat::Ones(1, 1);
    for (int id = root; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (n.grad.size() != 0 && n.vjp) n.vjp(n.grad);
    }
  }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool needs_grad = false;
    std::function<void(const Mat&)> vjp;
  };

  bool needs(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }

  void accum(int id, const Mat& g) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  int push(Mat value, bool needs_grad, std::function<void(const Mat&)> vjp) {
    nodes_.push_back(Node{std::move(value), {}, needs_grad, std::move(vjp)});
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
};

}  // namespace cgbg::nn
