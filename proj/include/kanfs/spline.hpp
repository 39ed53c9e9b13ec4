#pragma once

/**
 * @file spline.hpp
 * @brief Clamped B-spline bases: knot construction, Cox-de Boor evaluation,
 *        first derivatives and batched expansion of a feature matrix.
 *
 * Inputs outside the knot domain are clamped to the nearest boundary before
 * evaluation, so values always form a partition of unity. The derivative of
 * the clamped map is zero strictly outside the domain, and that is what
 * `eval_basis` reports there.
 */

#include "kanfs/core.hpp"

#include <span>
#include <utility>

namespace kanfs {

/// Nondecreasing, clamped knot sequence for a degree-p spline basis.
class KnotVector {
 public:
  KnotVector() = default;

  KnotVector(std::vector<double> knots, int degree) : knots_(std::move(knots)), degree_(degree) {
    if (degree_ < 0) throw Error(ErrorCode::invalid_size, "spline degree must be >= 0");
    const auto n = static_cast<int>(knots_.size());
    if (n < 2 * (degree_ + 1)) throw Error(ErrorCode::invalid_size, "too few knots for degree");
    for (int i = 1; i < n; ++i)
      if (!(knots_[i] >= knots_[i - 1])) throw Error(ErrorCode::invalid_range, "knots must be nondecreasing");
    for (int i = 0; i <= degree_; ++i)
      if (knots_[i] != knots_.front() || knots_[n - 1 - i] != knots_.back())
        throw Error(ErrorCode::invalid_range, "knot vector must be clamped at both ends");
    if (!(knots_.front() < knots_.back())) throw Error(ErrorCode::invalid_range, "empty knot domain");
  }

  [[nodiscard]] int degree() const noexcept { return degree_; }
  [[nodiscard]] int num_basis() const noexcept { return static_cast<int>(knots_.size()) - degree_ - 1; }
  [[nodiscard]] double lo() const noexcept { return knots_.front(); }
  [[nodiscard]] double hi() const noexcept { return knots_.back(); }
  [[nodiscard]] std::span<const double> knots() const noexcept { return knots_; }

  friend bool operator==(const KnotVector&, const KnotVector&) = default;

 private:
  std::vector<double> knots_;
  int degree_ = 0;
};

/// Clamped uniform knots: `grid_size` equal intervals on [lo, hi], K = grid_size + degree.
inline KnotVector build_knots(double lo, double hi, int grid_size, int degree) {
  if (!(lo < hi)) throw Error(ErrorCode::invalid_range, "build_knots requires lo < hi");
  if (grid_size < 1) throw Error(ErrorCode::invalid_size, "grid_size must be >= 1");
  if (degree < 0) throw Error(ErrorCode::invalid_size, "degree must be >= 0");
  std::vector<double> t;
  t.reserve(static_cast<std::size_t>(grid_size + 2 * degree + 1));
  for (int i = 0; i < degree; ++i) t.push_back(lo);
  const double h = (hi - lo) / grid_size;
  for (int i = 0; i <= grid_size; ++i) t.push_back(i == grid_size ? hi : lo + h * i);
  for (int i = 0; i < degree; ++i) t.push_back(hi);
  return KnotVector(std::move(t), degree);
}

/// Knots spanning the observed range of `column`; a constant column is widened by 0.5 each side.
inline KnotVector knots_for_values(std::span<const double> column, int grid_size, int degree) {
  if (column.empty()) throw Error(ErrorCode::invalid_size, "cannot place knots on an empty column");
  auto [mn, mx] = std::minmax_element(column.begin(), column.end());
  double lo = *mn, hi = *mx;
  if (!(lo < hi)) {
    lo -= 0.5;
    hi += 0.5;
  }
  return build_knots(lo, hi, grid_size, degree);
}

struct BasisEval {
  double x = 0.0;
  std::vector<double> values;
  std::vector<double> derivatives;
};

/**
 * Evaluates all K basis functions and their first derivatives at `x`,
 * writing into `values` and `derivatives` (each of length K).
 *
 * Cox-de Boor recurrence on the full index range; K is small in practice so
 * the O(K p) work is negligible. 0/0 terms are taken as 0.
 */
inline void eval_basis_into(const KnotVector& kv, double x, std::span<double> values,
                            std::span<double> derivatives) {
  const auto t = kv.knots();
  const int p = kv.degree();
  const int n_knots = static_cast<int>(t.size());
  const int K = kv.num_basis();

  const bool outside = x < kv.lo() || x > kv.hi();
  const double xc = std::clamp(x, kv.lo(), kv.hi());

  // Span s with t[s] <= xc < t[s+1]; the right boundary belongs to the last nonempty interval.
  int span = -1;
  if (xc >= kv.hi()) {
    for (int i = n_knots - 2; i >= 0; --i)
      if (t[i] < t[i + 1]) {
        span = i;
        break;
      }
  } else {
    auto it = std::upper_bound(t.begin(), t.end(), xc);
    span = static_cast<int>(it - t.begin()) - 1;
  }

  thread_local std::vector<double> work;
  work.assign(static_cast<std::size_t>(n_knots), 0.0);
  work[static_cast<std::size_t>(span)] = 1.0;

  thread_local std::vector<double> lower;  // degree p-1 values, needed for derivatives
  for (int q = 1; q <= p; ++q) {
    if (q == p) lower.assign(work.begin(), work.begin() + (n_knots - q));
    const int count = n_knots - q - 1;
    for (int i = 0; i < count; ++i) {
      double v = 0.0;
      const double left_den = t[i + q] - t[i];
      const double right_den = t[i + q + 1] - t[i + 1];
      if (left_den > 0.0 && work[i] != 0.0) v += (xc - t[i]) / left_den * work[i];
      if (right_den > 0.0 && work[i + 1] != 0.0) v += (t[i + q + 1] - xc) / right_den * work[i + 1];
      work[i] = v;
    }
  }

  for (int k = 0; k < K; ++k) values[k] = work[k];

  if (p == 0 || outside) {
    std::fill(derivatives.begin(), derivatives.begin() + K, 0.0);
    return;
  }
  for (int k = 0; k < K; ++k) {
    double d = 0.0;
    const double left_den = t[k + p] - t[k];
    const double right_den = t[k + p + 1] - t[k + 1];
    if (left_den > 0.0) d += p * lower[k] / left_den;
    if (right_den > 0.0) d -= p * lower[k + 1] / right_den;
    derivatives[k] = d;
  }
}

inline BasisEval eval_basis(const KnotVector& kv, double x) {
  BasisEval out;
  out.x = x;
  out.values.resize(static_cast<std::size_t>(kv.num_basis()));
  out.derivatives.resize(static_cast<std::size_t>(kv.num_basis()));
  eval_basis_into(kv, x, out.values, out.derivatives);
  return out;
}

/// Basis values and derivatives for a whole batch: both n x (d*K), feature blocks side by side.
struct BatchBasis {
  Matrix values;
  Matrix derivatives;
};

inline int common_basis_size(std::span<const KnotVector> kv) {
  if (kv.empty()) throw Error(ErrorCode::dimension_mismatch, "no knot vectors given");
  const int K = kv.front().num_basis();
  for (const auto& k : kv)
    if (k.num_basis() != K) throw Error(ErrorCode::dimension_mismatch, "all features must share K");
  return K;
}

inline BatchBasis expand_batch_with_derivatives(std::span<const KnotVector> kv, const Matrix& X) {
  if (static_cast<Index>(kv.size()) != X.cols())
    throw Error(ErrorCode::dimension_mismatch, "expected " + std::to_string(kv.size()) + " columns, got " +
                                                   std::to_string(X.cols()));
  const int K = common_basis_size(kv);
  const Index n = X.rows();
  const Index d = X.cols();
  BatchBasis out{Matrix(n, d * K), Matrix(n, d * K)};
  std::vector<double> v(static_cast<std::size_t>(K)), dv(static_cast<std::size_t>(K));
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i < n; ++i) {
      eval_basis_into(kv[static_cast<std::size_t>(j)], X(i, j), v, dv);
      for (int k = 0; k < K; ++k) {
        out.values(i, j * K + k) = v[static_cast<std::size_t>(k)];
        out.derivatives(i, j * K + k) = dv[static_cast<std::size_t>(k)];
      }
    }
  }
  return out;
}

/// Row i is b_1(X_i1) ‖ … ‖ b_d(X_id).
inline Matrix expand_batch(std::span<const KnotVector> kv, const Matrix& X) {
  return expand_batch_with_derivatives(kv, X).values;
}

}  // namespace kanfs
