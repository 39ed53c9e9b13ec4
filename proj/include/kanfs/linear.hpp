#pragma once

// Linear models: ridge, multinomial logistic regression, L1-penalized
// least squares and logistic regression by coordinate descent, and a
// hinge-loss linear SVM.

#include "kanfs/core.hpp"

#include <Eigen/Cholesky>

namespace kanfs {

struct LinearFit {
  Matrix coef;       // d x outputs
  Vector intercept;  // outputs
  bool converged = true;
  int iterations = 0;
};

/// Ridge regression with an unpenalized intercept: minimizes ||y - Xb - c||^2 + alpha ||b||^2.
inline LinearFit ridge(const Matrix& X, const Vector& y, double alpha) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::precondition, "ridge alpha must be > 0");
  if (X.rows() != y.size()) throw Error(ErrorCode::dimension_mismatch, "ridge: X and y row counts differ");
  const Eigen::RowVectorXd mean = X.colwise().mean();
  const double y_mean = y.mean();
  const Matrix Xc = X.rowwise() - mean;
  Matrix gram = Xc.transpose() * Xc;
  gram.diagonal().array() += alpha;
  LinearFit fit;
  fit.coef = gram.ldlt().solve(Xc.transpose() * (y.array() - y_mean).matrix());
  fit.intercept = Vector::Constant(1, y_mean - (mean * fit.coef)(0, 0));
  return fit;
}

struct LogisticParams {
  double l2 = 1e-3;  // penalty on mean log-loss
  int iterations = 500;
  double learning_rate = 0.5;
  double momentum = 0.9;
};

/// Multinomial logistic regression by full-batch gradient descent with momentum.
inline LinearFit logistic_regression(const Matrix& X, const Vector& y, int n_classes, const LogisticParams& p = {}) {
  check_labels(y, Task::classification(n_classes));
  const Index n = X.rows(), d = X.cols();
  Matrix W = Matrix::Zero(d, n_classes), vW = W;
  Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(n_classes), vb = b;
  Matrix onehot = Matrix::Zero(n, n_classes);
  for (Index i = 0; i < n; ++i) onehot(i, static_cast<Index>(y[i])) = 1.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int it = 0; it < p.iterations; ++it) {
    Matrix Z = (X * W).rowwise() + b;
    for (Index i = 0; i < n; ++i) {
      const double mx = Z.row(i).maxCoeff();
      Z.row(i) = (Z.row(i).array() - mx).exp();
      Z.row(i) /= Z.row(i).sum();
    }
    const Matrix G = (Z - onehot) * inv_n;
    const Matrix gW = X.transpose() * G + 2.0 * p.l2 * W;
    const Eigen::RowVectorXd gb = G.colwise().sum();
    vW = p.momentum * vW - p.learning_rate * gW;
    vb = p.momentum * vb - p.learning_rate * gb;
    W += vW;
    b += vb;
  }
  LinearFit fit;
  fit.coef = W;
  fit.intercept = b.transpose();
  fit.iterations = p.iterations;
  return fit;
}

inline double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

struct LassoParams {
  double tolerance = 1e-8;
  int max_sweeps = 10000;
};

/**
 * Cyclic coordinate descent for (1/2n)||y - X b||^2 + lambda ||b||_1.
 *
 * No intercept and no rescaling: callers center and standardize. `warm`
 * seeds the iterate. Stops when the largest coefficient change in a sweep
 * falls below the tolerance; otherwise returns the last iterate with
 * `converged = false`.
 */
inline LinearFit lasso_coordinate_descent(const Matrix& X, const Vector& y, double lambda, const LassoParams& p = {},
                                          const Vector* warm = nullptr) {
  if (!(lambda >= 0.0)) throw Error(ErrorCode::precondition, "lambda must be >= 0");
  const Index n = X.rows(), d = X.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  Vector beta = warm ? *warm : Vector::Zero(d);
  Vector residual = y - X * beta;
  const Vector col_sq = X.colwise().squaredNorm().transpose() * inv_n;
  LinearFit fit;
  fit.converged = false;
  for (int sweep = 1; sweep <= p.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Index j = 0; j < d; ++j) {
      if (col_sq[j] == 0.0) {
        beta[j] = 0.0;
        continue;
      }
      const double old = beta[j];
      const double rho = X.col(j).dot(residual) * inv_n + col_sq[j] * old;
      const double updated = soft_threshold(rho, lambda) / col_sq[j];
      if (updated != old) {
        residual -= (updated - old) * X.col(j);
        beta[j] = updated;
        max_change = std::max(max_change, std::abs(updated - old));
      }
    }
    fit.iterations = sweep;
    if (max_change < p.tolerance) {
      fit.converged = true;
      break;
    }
  }
  fit.coef = beta;
  fit.intercept = Vector::Zero(1);
  return fit;
}

/// Smallest lambda for which the all-zero solution is optimal.
inline double lasso_lambda_max(const Matrix& X, const Vector& y) {
  return (X.transpose() * y).cwiseAbs().maxCoeff() / static_cast<double>(X.rows());
}

/**
 * Binary L1-penalized logistic regression, labels in {0, 1}:
 *   mean log-loss + lambda ||b||_1, intercept unpenalized.
 *
 * Proximal Newton coordinate descent: each coordinate takes a soft-thresholded
 * step against the current curvature sum_i p_i (1 - p_i) x_ij^2 / n.
 */
inline LinearFit l1_logistic(const Matrix& X, const Vector& y01, double lambda, const LassoParams& p = {},
                             const LinearFit* warm = nullptr) {
  const Index n = X.rows(), d = X.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  Vector beta = warm ? Vector(warm->coef.col(0)) : Vector::Zero(d);
  double b0 = warm ? warm->intercept[0] : 0.0;
  Vector eta = (X * beta).array() + b0;
  auto sigmoid = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  LinearFit fit;
  fit.converged = false;
  for (int sweep = 1; sweep <= p.max_sweeps; ++sweep) {
    double max_change = 0.0;
    {
      double g = 0.0, h = 0.0;
      for (Index i = 0; i < n; ++i) {
        const double pi = sigmoid(eta[i]);
        g += (y01[i] - pi);
        h += pi * (1.0 - pi);
      }
      h = std::max(h * inv_n, 1e-6);
      const double step = g * inv_n / h;
      b0 += step;
      eta.array() += step;
      max_change = std::max(max_change, std::abs(step));
    }
    for (Index j = 0; j < d; ++j) {
      double g = 0.0, h = 0.0;
      for (Index i = 0; i < n; ++i) {
        const double pi = sigmoid(eta[i]);
        const double x = X(i, j);
        g += x * (y01[i] - pi);
        h += pi * (1.0 - pi) * x * x;
      }
      g *= inv_n;
      h = std::max(h * inv_n, 1e-6);
      const double old = beta[j];
      const double updated = soft_threshold(h * old + g, lambda) / h;
      if (updated != old) {
        eta += (updated - old) * X.col(j);
        beta[j] = updated;
        max_change = std::max(max_change, std::abs(updated - old));
      }
    }
    fit.iterations = sweep;
    if (max_change < p.tolerance) {
      fit.converged = true;
      break;
    }
  }
  fit.coef = beta;
  fit.intercept = Vector::Constant(1, b0);
  return fit;
}

struct SvmParams {
  double regularization = 1e-2;  // lambda in lambda/2 ||w||^2 + mean hinge
  int iterations = 300;
};

/**
 * Binary soft-margin linear SVM, labels in {-1, +1}, trained by deterministic
 * full-batch subgradient descent with step 1 / (lambda t). Returns the
 * averaged iterate over the second half of the run.
 */
inline LinearFit linear_svm(const Matrix& X, const Vector& y_pm, const SvmParams& p = {}) {
  const Index n = X.rows(), d = X.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  Vector w = Vector::Zero(d), w_avg = Vector::Zero(d);
  double b = 0.0, b_avg = 0.0;
  int averaged = 0;
  for (int t = 1; t <= p.iterations; ++t) {
    const Vector margin = y_pm.cwiseProduct((X * w).array().matrix() + Vector::Constant(n, b));
    Vector gw = p.regularization * w;
    double gb = 0.0;
    for (Index i = 0; i < n; ++i)
      if (margin[i] < 1.0) {
        gw -= inv_n * y_pm[i] * X.row(i).transpose();
        gb -= inv_n * y_pm[i];
      }
    const double eta = 1.0 / (p.regularization * (t + 1.0));
    w -= eta * gw;
    b -= eta * gb;
    if (t > p.iterations / 2) {
      w_avg += w;
      b_avg += b;
      ++averaged;
    }
  }
  LinearFit fit;
  fit.coef = w_avg / std::max(1, averaged);
  fit.intercept = Vector::Constant(1, b_avg / std::max(1, averaged));
  fit.iterations = p.iterations;
  return fit;
}

/// Per-column mean and standard deviation (population); zero spread maps to 1.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const Matrix& X) {
    Standardizer s;
    s.mean = X.colwise().mean();
    s.scale = ((X.rowwise() - s.mean).array().square().colwise().mean()).sqrt().matrix();
    for (Index j = 0; j < s.scale.size(); ++j)
      if (!(s.scale[j] > 1e-12)) s.scale[j] = 1.0;
    return s;
  }

  [[nodiscard]] Matrix apply(const Matrix& X) const {
    return (X.rowwise() - mean).array().rowwise() / scale.array();
  }
};

}  // namespace kanfs
