#pragma once

// Shared vocabulary types: matrices, task descriptors, errors and seeding.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kanfs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class ErrorCode {
  invalid_range,
  invalid_size,
  dimension_mismatch,
  label_out_of_range,
  non_finite_loss,
  index_out_of_range,
  empty_evaluation_set,
  too_few_samples,
  missing_target,
  empty_file,
  inconsistent_column_count,
  malformed_value,
  invalid_dims,
  unknown_retention,
  leakage,
  config,
  io,
  precondition,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_range: return "invalid-range";
    case ErrorCode::invalid_size: return "invalid-size";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::label_out_of_range: return "label-out-of-range";
    case ErrorCode::non_finite_loss: return "non-finite-loss";
    case ErrorCode::index_out_of_range: return "index-out-of-range";
    case ErrorCode::empty_evaluation_set: return "empty-evaluation-set";
    case ErrorCode::too_few_samples: return "too-few-samples";
    case ErrorCode::missing_target: return "missing-target";
    case ErrorCode::empty_file: return "empty-file";
    case ErrorCode::inconsistent_column_count: return "inconsistent-column-count";
    case ErrorCode::malformed_value: return "malformed-value";
    case ErrorCode::invalid_dims: return "invalid-dims";
    case ErrorCode::unknown_retention: return "unknown-retention";
    case ErrorCode::leakage: return "leakage";
    case ErrorCode::config: return "config";
    case ErrorCode::io: return "io";
    case ErrorCode::precondition: return "precondition";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

enum class TaskKind { regression, classification };

struct Task {
  TaskKind kind = TaskKind::regression;
  int n_classes = 0;  // only meaningful for classification

  static Task regression() { return {TaskKind::regression, 0}; }
  static Task classification(int n_classes) { return {TaskKind::classification, n_classes}; }

  [[nodiscard]] bool is_classification() const noexcept { return kind == TaskKind::classification; }
  [[nodiscard]] int output_dim() const noexcept { return is_classification() ? n_classes : 1; }

  friend bool operator==(const Task&, const Task&) = default;
};

inline std::string_view to_string(TaskKind kind) {
  return kind == TaskKind::classification ? "classification" : "regression";
}

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent child seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t s = mix_seed(seed);
  for (auto t : tags) s = mix_seed(s ^ mix_seed(t + 0x632be59bd9b4e019ULL));
  return s;
}

inline std::uint64_t hash_string(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline void check_labels(const Vector& y, const Task& task) {
  if (!task.is_classification()) return;
  for (Index i = 0; i < y.size(); ++i) {
    const double v = y[i];
    if (!(v >= 0.0) || v >= task.n_classes || v != static_cast<double>(static_cast<int>(v)))
      throw Error(ErrorCode::label_out_of_range,
                  "label " + std::to_string(v) + " at row " + std::to_string(i) + " outside [0, " +
                      std::to_string(task.n_classes) + ")");
  }
}

/// Where a block of rows came from relative to model fitting.
enum class Provenance {
  fit,         // rows a model or selector was trained on
  holdout,     // carved out of the training fold, never seen by the model being assessed
  validation,  // outer validation fold; selectors must never see these
};

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::fit: return "fit";
    case Provenance::holdout: return "holdout";
    case Provenance::validation: return "validation";
  }
  return "unknown";
}

/// Features and targets tagged with their provenance.
struct DataSlice {
  Matrix X;
  Vector y;
  Provenance provenance = Provenance::fit;
};

/// Rows of `X` selected by `rows`, in order.
inline Matrix take_rows(const Matrix& X, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), X.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = X.row(rows[r]);
  return out;
}

inline Vector take_rows(const Vector& y, const std::vector<Index>& rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out[static_cast<Index>(r)] = y[rows[r]];
  return out;
}

inline std::vector<Index> iota_indices(Index n) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  return idx;
}

/// Seeded 80/20-style split of `0..n-1`, returned as (fit, holdout).
inline std::pair<std::vector<Index>, std::vector<Index>> holdout_split(Index n, double holdout_fraction,
                                                                       std::uint64_t seed) {
  auto idx = iota_indices(n);
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  auto n_hold = static_cast<Index>(std::llround(holdout_fraction * static_cast<double>(n)));
  n_hold = std::clamp<Index>(n_hold, 1, std::max<Index>(1, n - 1));
  std::vector<Index> hold(idx.begin(), idx.begin() + n_hold);
  std::vector<Index> fit(idx.begin() + n_hold, idx.end());
  std::sort(hold.begin(), hold.end());
  std::sort(fit.begin(), fit.end());
  return {fit, hold};
}

}  // namespace kanfs
