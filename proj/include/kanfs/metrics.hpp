#pragma once

#include "kanfs/core.hpp"

namespace kanfs {

/// Unweighted mean of one-vs-rest F1 over `n_classes`; a class with 2TP+FP+FN = 0 contributes 0.
inline double macro_f1(const Vector& y, const Vector& y_hat, int n_classes) {
  if (y.size() != y_hat.size()) throw Error(ErrorCode::dimension_mismatch, "macro_f1: length mismatch");
  if (y.size() == 0) throw Error(ErrorCode::empty_evaluation_set, "macro_f1: no samples");
  if (n_classes < 1) throw Error(ErrorCode::precondition, "macro_f1: need at least one class");
  const Task task = Task::classification(n_classes);
  check_labels(y, task);
  check_labels(y_hat, task);
  std::vector<double> tp(n_classes, 0.0), fp(n_classes, 0.0), fn(n_classes, 0.0);
  for (Index i = 0; i < y.size(); ++i) {
    const auto a = static_cast<std::size_t>(y[i]);
    const auto b = static_cast<std::size_t>(y_hat[i]);
    if (a == b) {
      tp[a] += 1;
    } else {
      fp[b] += 1;
      fn[a] += 1;
    }
  }
  double total = 0.0;
  for (int c = 0; c < n_classes; ++c) {
    const double den = 2 * tp[c] + fp[c] + fn[c];
    total += den > 0 ? 2 * tp[c] / den : 0.0;
  }
  return total / n_classes;
}

/// Coefficient of determination; a constant target scores 1 when predicted exactly, else 0.
inline double r2(const Vector& y, const Vector& y_hat) {
  if (y.size() != y_hat.size()) throw Error(ErrorCode::dimension_mismatch, "r2: length mismatch");
  if (y.size() == 0) throw Error(ErrorCode::empty_evaluation_set, "r2: no samples");
  const double ss_res = (y - y_hat).squaredNorm();
  const double ss_tot = (y.array() - y.mean()).square().sum();
  if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

inline double accuracy(const Vector& y, const Vector& y_hat) {
  if (y.size() != y_hat.size() || y.size() == 0) throw Error(ErrorCode::dimension_mismatch, "accuracy: bad lengths");
  return (y.array() == y_hat.array()).cast<double>().mean();
}

/// Macro-F1 for classification, R^2 for regression.
inline double task_score(const Task& task, const Vector& y, const Vector& y_hat) {
  return task.is_classification() ? macro_f1(y, y_hat, task.n_classes) : r2(y, y_hat);
}

}  // namespace kanfs
