#pragma once

// Helpers shared by the unit tests: random models and finite-difference oracles.

#include "kanfs/kan.hpp"

#include <functional>

namespace kanfs::testing {

inline Matrix random_matrix(Index rows, Index cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix M(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) M(r, c) = u(rng);
  return M;
}

/// Model with knots on [-1, 1] per input and weights and biases drawn uniformly from [-1, 1].
inline KanModel random_model(Index d, int hidden, const Task& task, int grid, int degree, Activation act,
                             std::uint64_t seed) {
  Rng rng(seed);
  ModelSpec spec;
  spec.hidden = hidden;
  spec.grid_size = grid;
  spec.degree = degree;
  spec.activation = act;
  Matrix range(2, d);
  range.row(0).setConstant(-1.0);
  range.row(1).setConstant(1.0);
  KanModel m = make_model(spec, range, task, seed);
  for (auto& layer : m.layers) {
    layer.base = random_matrix(layer.base.rows(), layer.base.cols(), rng);
    layer.spline = random_matrix(layer.spline.rows(), layer.spline.cols(), rng);
    layer.bias = random_matrix(layer.out_dim(), 1, rng).col(0);
  }
  return m;
}

inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Per-sample, per-term evaluation of a single layer without any matrix products.
inline Matrix naive_layer(const KanLayer& layer, const Matrix& X) {
  const Index n = X.rows(), d = layer.in_dim(), m = layer.out_dim();
  const int K = layer.basis_size();
  Matrix Y = Matrix::Zero(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index p = 0; p < m; ++p) {
      double acc = layer.bias.size() ? layer.bias[p] : 0.0;
      for (Index j = 0; j < d; ++j) {
        acc += layer.base(p, j) * activate(layer.activation, X(i, j));
        const auto b = eval_basis(layer.knots[static_cast<std::size_t>(j)], X(i, j));
        for (int k = 0; k < K; ++k) acc += layer.spline(p, j * K + k) * b.values[static_cast<std::size_t>(k)];
      }
      Y(i, p) = acc;
    }
  return Y;
}

inline Matrix naive_forward(const KanModel& model, const Matrix& X) {
  Matrix cur = X;
  for (const auto& layer : model.layers) cur = naive_layer(layer, cur);
  return cur;
}

/// Task loss computed from the naive forward pass.
inline double naive_loss(const KanModel& model, const Matrix& X, const Vector& y) {
  const Matrix Y = naive_forward(model, X);
  double total = 0.0;
  for (Index i = 0; i < X.rows(); ++i) {
    if (model.task.is_classification()) {
      double z = 0.0;
      for (Index c = 0; c < Y.cols(); ++c) z += std::exp(Y(i, c));
      total += std::log(z) - Y(i, static_cast<Index>(y[i]));
    } else {
      total += (Y(i, 0) - y[i]) * (Y(i, 0) - y[i]);
    }
  }
  return total / static_cast<double>(X.rows());
}

}  // namespace kanfs::testing
