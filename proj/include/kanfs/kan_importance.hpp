#pragma once

/**
 * @file kan_importance.hpp
 * @brief Feature importance read off a trained KAN.
 *
 *  - KAN-L1 / KAN-L2: norms of each feature's first-layer spline block,
 *    optionally together with its base-weight column.
 *  - KAN-KO: increase of held-out loss when a feature's first-layer
 *    parameters are zeroed.
 *  - KAN-SI: mean absolute input gradient over held-out rows, scaled by the
 *    feature's spread on the same rows.
 *
 * Only the first layer is inspected; it is the only one that sees raw features.
 */

#include "kanfs/importance.hpp"
#include "kanfs/kan.hpp"

#include <map>

namespace kanfs {

enum class NormKind { l1, l2 };

namespace detail {

inline ImportanceVector coefficient_importance(const KanModel& model, NormKind norm, bool include_base) {
  model.validate();
  const auto& layer = model.layers.front();
  const Index d = layer.in_dim();
  std::vector<double> raw(static_cast<std::size_t>(d));
  for (Index j = 0; j < d; ++j) {
    const auto block = layer.spline_block(j);
    double v = 0.0;
    if (norm == NormKind::l1) {
      v = block.cwiseAbs().sum();
      if (include_base) v += layer.base.col(j).cwiseAbs().sum();
    } else {
      double sq = block.squaredNorm();
      if (include_base) sq += layer.base.col(j).squaredNorm();
      v = std::sqrt(sq);
    }
    raw[static_cast<std::size_t>(j)] = v;
  }
  auto out = make_importance(norm == NormKind::l1 ? "kan_l1" : "kan_l2", std::move(raw));
  out.config["include_base"] = include_base;
  return out;
}

inline void require_holdout(const DataSlice& eval, const char* who) {
  if (eval.provenance != Provenance::holdout)
    throw Error(ErrorCode::leakage, std::string(who) + " needs held-out evaluation rows, got provenance '" +
                                        std::string(to_string(eval.provenance)) + "'");
  if (eval.X.rows() == 0) throw Error(ErrorCode::empty_evaluation_set, std::string(who) + " got no rows");
}

}  // namespace detail

inline ImportanceVector importance_l1(const KanModel& model, bool include_base = true) {
  return detail::coefficient_importance(model, NormKind::l1, include_base);
}

inline ImportanceVector importance_l2(const KanModel& model, bool include_base = true) {
  return detail::coefficient_importance(model, NormKind::l2, include_base);
}

/// Copy of `model` with column j of the first layer's base weights and spline block j zeroed.
inline KanModel knockout_feature(const KanModel& model, Index j) {
  if (j < 0 || j >= model.in_dim())
    throw Error(ErrorCode::index_out_of_range, "feature " + std::to_string(j) + " outside [0, " +
                                                   std::to_string(model.in_dim()) + ")");
  KanModel out = model;
  auto& layer = out.layers.front();
  layer.base.col(j).setZero();
  layer.spline_block(j).setZero();
  return out;
}

struct KnockoutReport {
  double base_risk = 0.0;
  std::vector<double> knockout_risks;
  std::vector<double> deltas;
  double delta_floor = 1e-12;
};

struct KnockoutResult {
  ImportanceVector importance;
  KnockoutReport report;
};

/**
 * Knockout importance on held-out rows.
 *
 * delta_j = max(0, L_j - L) with L the unpenalized task loss. Scores are
 * delta_j / (sum_k delta_k + delta_floor), rescaled to sum exactly to one; when
 * every delta is zero the vector is all-zero and flagged.
 */
inline KnockoutResult importance_ko(const KanModel& model, const DataSlice& eval, double delta_floor = 1e-12) {
  detail::require_holdout(eval, "importance_ko");
  if (!(delta_floor > 0.0)) throw Error(ErrorCode::precondition, "delta floor must be > 0");
  KnockoutResult res;
  auto& rep = res.report;
  rep.delta_floor = delta_floor;
  rep.base_risk = loss(model, eval.X, eval.y);
  const Index d = model.in_dim();
  rep.knockout_risks.resize(static_cast<std::size_t>(d));
  rep.deltas.resize(static_cast<std::size_t>(d));
  for (Index j = 0; j < d; ++j) {
    const double lj = loss(knockout_feature(model, j), eval.X, eval.y);
    rep.knockout_risks[static_cast<std::size_t>(j)] = lj;
    rep.deltas[static_cast<std::size_t>(j)] = std::max(0.0, lj - rep.base_risk);
  }
  const double total = std::accumulate(rep.deltas.begin(), rep.deltas.end(), 0.0);
  std::vector<double> ratio(rep.deltas.size());
  for (std::size_t j = 0; j < ratio.size(); ++j) ratio[j] = rep.deltas[j] / (total + delta_floor);
  res.importance = make_importance("kan_ko", ratio);
  res.importance.raw_scores = rep.deltas;
  res.importance.config["delta_floor"] = delta_floor;
  return res;
}

enum class SpreadScale { std_dev, iqr, none };

inline std::string_view to_string(SpreadScale s) {
  switch (s) {
    case SpreadScale::std_dev: return "std";
    case SpreadScale::iqr: return "iqr";
    case SpreadScale::none: return "none";
  }
  return "std";
}

inline SpreadScale spread_scale_from_string(std::string_view s) {
  if (s == "std") return SpreadScale::std_dev;
  if (s == "iqr") return SpreadScale::iqr;
  if (s == "none") return SpreadScale::none;
  throw Error(ErrorCode::config, "unknown sensitivity scale '" + std::string(s) + "'");
}

struct SensitivityConfig {
  SpreadScale scale = SpreadScale::std_dev;
  std::map<Index, std::string> onehot_groups;  // encoded column -> source categorical column
};

/// Population standard deviation.
inline double column_std(const Eigen::Ref<const Vector>& v) {
  if (v.size() == 0 || v.minCoeff() == v.maxCoeff()) return 0.0;  // exact zero despite mean rounding
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().mean());
}

/// Linear-interpolation quantile on sorted data (position q * (n - 1)).
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double column_iqr(const Eigen::Ref<const Vector>& v) {
  std::vector<double> s(v.data(), v.data() + v.size());
  std::sort(s.begin(), s.end());
  return quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
}

/**
 * Sensitivity importance: scaled mean |df/dx_i| over held-out rows.
 *
 * Dummy columns of one categorical variable all receive the sum of their
 * scaled scores, so the category ranks as a unit. `raw_scores` keeps the
 * per-column scaled means before grouping.
 */
inline ImportanceVector importance_si(const KanModel& model, const DataSlice& eval, const SensitivityConfig& cfg = {}) {
  detail::require_holdout(eval, "importance_si");
  const Matrix grads = input_gradients(model, eval.X);
  const Index d = eval.X.cols();
  std::vector<double> scaled(static_cast<std::size_t>(d));
  for (Index i = 0; i < d; ++i) {
    const double mean_abs = grads.col(i).cwiseAbs().mean();
    double s = 1.0;
    if (cfg.scale == SpreadScale::std_dev) s = column_std(eval.X.col(i));
    if (cfg.scale == SpreadScale::iqr) s = column_iqr(eval.X.col(i));
    scaled[static_cast<std::size_t>(i)] = s * mean_abs;
  }
  std::vector<double> grouped = scaled;
  if (!cfg.onehot_groups.empty()) {
    std::map<std::string, double> totals;
    for (const auto& [col, group] : cfg.onehot_groups) {
      if (col < 0 || col >= d) throw Error(ErrorCode::index_out_of_range, "one-hot group column out of range");
      totals[group] += scaled[static_cast<std::size_t>(col)];
    }
    for (const auto& [col, group] : cfg.onehot_groups) grouped[static_cast<std::size_t>(col)] = totals[group];
  }
  auto out = make_importance("kan_si", grouped);
  out.raw_scores = scaled;
  out.config["scale"] = std::string(to_string(cfg.scale));
  return out;
}

}  // namespace kanfs
