#pragma once

/**
 * @file baselines.hpp
 * @brief Classical feature selectors used as comparison points: mutual
 *        information ranking, LASSO, random-forest impurity importance,
 *        SVM-RFE and random-forest permutation importance.
 *
 * Every selector returns an ImportanceVector over the columns it was given
 * and is deterministic for a fixed seed.
 */

#include "kanfs/importance.hpp"
#include "kanfs/linear.hpp"
#include "kanfs/metrics.hpp"
#include "kanfs/trees.hpp"

#include <map>
#include <optional>

namespace kanfs {

// ---------------------------------------------------------------------------
// Mutual information

/// Equal-frequency bin index of each value; ties share a bin.
inline std::vector<int> equal_frequency_bins(const Eigen::Ref<const Vector>& v, int bins) {
  const Index n = v.size();
  std::vector<double> sorted(v.data(), v.data() + n);
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> out(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const auto below = std::lower_bound(sorted.begin(), sorted.end(), v[i]) - sorted.begin();
    out[static_cast<std::size_t>(i)] =
        std::min(bins - 1, static_cast<int>((static_cast<double>(below) * bins) / static_cast<double>(n)));
  }
  return out;
}

/// Plug-in mutual information (nats) between two discrete codings.
inline double plugin_mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
  const double n = static_cast<double>(a.size());
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> pa, pb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    pa[a[i]] += 1.0;
    pb[b[i]] += 1.0;
  }
  double mi = 0.0;
  for (const auto& [key, c] : joint) mi += c / n * std::log(c * n / (pa[key.first] * pb[key.second]));
  return std::max(0.0, mi);
}

inline ImportanceVector mi_rank(const Matrix& X, const Vector& y, const Task& task, int bins = 8) {
  if (X.rows() < 10) throw Error(ErrorCode::too_few_samples, "mutual information needs at least 10 rows");
  if (bins < 2) throw Error(ErrorCode::precondition, "need at least 2 bins");
  std::vector<int> target;
  if (task.is_classification()) {
    target.resize(static_cast<std::size_t>(y.size()));
    for (Index i = 0; i < y.size(); ++i) target[static_cast<std::size_t>(i)] = static_cast<int>(y[i]);
  } else {
    target = equal_frequency_bins(y, bins);
  }
  const bool constant_target = std::all_of(target.begin(), target.end(), [&](int t) { return t == target.front(); });
  std::vector<double> raw(static_cast<std::size_t>(X.cols()), 0.0);
  if (!constant_target)
    for (Index j = 0; j < X.cols(); ++j)
      raw[static_cast<std::size_t>(j)] = plugin_mutual_information(equal_frequency_bins(X.col(j), bins), target);
  auto out = make_importance("mi", raw);
  out.config["bins"] = bins;
  if (constant_target) out.flags.emplace_back("degenerate_target");
  return out;
}

// ---------------------------------------------------------------------------
// LASSO

struct LassoSelectConfig {
  std::optional<double> lambda;  // unset: chosen by internal cross-validation
  int cv_folds = 3;
  int grid_points = 10;
  double grid_ratio = 1e-3;  // smallest grid lambda relative to lambda_max
  LassoParams solver;
};

namespace detail {

inline Vector class_indicator(const Vector& y, int c) {
  return (y.array() == static_cast<double>(c)).cast<double>();
}

// Coefficients (d x outputs) of the L1 model at `lambda` on standardized X.
inline LinearFit lasso_model(const Matrix& Z, const Vector& y, const Task& task, double lambda,
                             const LassoParams& solver, const LinearFit* warm) {
  if (!task.is_classification()) {
    const double y_mean = y.mean();
    const Vector yc = y.array() - y_mean;
    Vector w0;
    if (warm) w0 = warm->coef.col(0);
    auto fit = lasso_coordinate_descent(Z, yc, lambda, solver, warm ? &w0 : nullptr);
    fit.intercept = Vector::Constant(1, y_mean);
    return fit;
  }
  const int outputs = task.n_classes == 2 ? 1 : task.n_classes;
  LinearFit all;
  all.coef = Matrix::Zero(Z.cols(), outputs);
  all.intercept = Vector::Zero(outputs);
  for (int c = 0; c < outputs; ++c) {
    const int positive = task.n_classes == 2 ? 1 : c;
    LinearFit w;
    if (warm) {
      w.coef = warm->coef.col(c);
      w.intercept = Vector::Constant(1, warm->intercept[c]);
    }
    auto fit = l1_logistic(Z, class_indicator(y, positive), lambda, solver, warm ? &w : nullptr);
    all.coef.col(c) = fit.coef.col(0);
    all.intercept[c] = fit.intercept[0];
    all.converged = all.converged && fit.converged;
    all.iterations = std::max(all.iterations, fit.iterations);
  }
  return all;
}

inline double lasso_lambda_max_for(const Matrix& Z, const Vector& y, const Task& task) {
  if (!task.is_classification()) return lasso_lambda_max(Z, y.array() - y.mean());
  double mx = 0.0;
  for (int c = 0; c < task.n_classes; ++c) {
    const Vector ind = class_indicator(y, c);
    mx = std::max(mx, lasso_lambda_max(Z, ind.array() - ind.mean()));
  }
  return mx;
}

inline double lasso_validation_error(const LinearFit& fit, const Matrix& Z, const Vector& y, const Task& task) {
  const Matrix eta = (Z * fit.coef).rowwise() + fit.intercept.transpose();
  if (!task.is_classification()) return (eta.col(0) - y).squaredNorm() / static_cast<double>(y.size());
  double total = 0.0;
  for (Index c = 0; c < eta.cols(); ++c) {
    const int positive = task.n_classes == 2 ? 1 : static_cast<int>(c);
    for (Index i = 0; i < y.size(); ++i) {
      const double p = std::clamp(1.0 / (1.0 + std::exp(-eta(i, c))), 1e-12, 1.0 - 1e-12);
      total -= y[i] == positive ? std::log(p) : std::log(1.0 - p);
    }
  }
  return total / static_cast<double>(y.size());
}

}  // namespace detail

/// Decreasing log-spaced grid from lambda_max down to lambda_max * ratio.
inline std::vector<double> lasso_lambda_grid(double lambda_max, int points, double ratio) {
  std::vector<double> grid;
  if (!(lambda_max > 0.0)) return {0.0};
  for (int i = 0; i < points; ++i) {
    const double t = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
    grid.push_back(lambda_max * std::pow(ratio, t));
  }
  return grid;
}

/**
 * LASSO selector. Columns are standardized internally; regression fits L1
 * least squares on the centered target, classification fits one-vs-rest L1
 * logistic models. Scores are |coefficients| summed over classes.
 */
inline ImportanceVector lasso_select(const Matrix& X, const Vector& y, const Task& task, const LassoSelectConfig& cfg,
                                     std::uint64_t seed) {
  const Standardizer st = Standardizer::fit(X);
  const Matrix Z = st.apply(X);
  double lambda = 0.0;
  std::string source = "fixed";
  bool converged = true;
  if (cfg.lambda) {
    lambda = *cfg.lambda;
  } else {
    source = "cv";
    const auto grid = lasso_lambda_grid(detail::lasso_lambda_max_for(Z, y, task), cfg.grid_points, cfg.grid_ratio);
    std::vector<double> errors(grid.size(), 0.0);
    std::vector<Index> order = iota_indices(X.rows());
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const int folds = std::max(2, cfg.cv_folds);
    for (int f = 0; f < folds; ++f) {
      std::vector<Index> train_rows, test_rows;
      for (std::size_t i = 0; i < order.size(); ++i)
        (static_cast<int>(i % static_cast<std::size_t>(folds)) == f ? test_rows : train_rows).push_back(order[i]);
      std::sort(train_rows.begin(), train_rows.end());
      std::sort(test_rows.begin(), test_rows.end());
      const Matrix Zt = take_rows(Z, train_rows), Zv = take_rows(Z, test_rows);
      const Vector yt = take_rows(y, train_rows), yv = take_rows(y, test_rows);
      std::optional<LinearFit> warm;
      for (std::size_t g = 0; g < grid.size(); ++g) {
        auto fit = detail::lasso_model(Zt, yt, task, grid[g], cfg.solver, warm ? &*warm : nullptr);
        errors[g] += detail::lasso_validation_error(fit, Zv, yv, task);
        warm = std::move(fit);
      }
    }
    std::size_t best = 0;
    for (std::size_t g = 1; g < grid.size(); ++g)
      if (errors[g] < errors[best] * (1.0 - 1e-12)) best = g;
    lambda = grid[best];
  }
  const auto fit = detail::lasso_model(Z, y, task, lambda, cfg.solver, nullptr);
  converged = fit.converged;
  std::vector<double> raw(static_cast<std::size_t>(X.cols()));
  for (Index j = 0; j < X.cols(); ++j) raw[static_cast<std::size_t>(j)] = fit.coef.row(j).cwiseAbs().sum();
  auto out = make_importance("lasso", raw);
  out.config["lambda"] = lambda;
  out.config["lambda_source"] = source;
  if (!converged) out.flags.emplace_back("non_converged");
  return out;
}

// ---------------------------------------------------------------------------
// Random forest

inline ImportanceVector rf_importance(const Matrix& X, const Vector& y, const Task& task, const ForestParams& params) {
  RandomForest rf;
  rf.fit(X, y, task, params);
  auto out = make_importance("rf_importance", rf.impurity_importance());
  out.config["n_trees"] = params.n_trees;
  out.config["max_depth"] = params.max_depth;
  return out;
}

// ---------------------------------------------------------------------------
// SVM-RFE

struct SvmRfeConfig {
  double step_fraction = 0.1;
  SvmParams svm;
  double ridge_alpha = 1.0;  // linear scorer for regression targets
};

namespace detail {

// Squared linear weights per column of Z (summed over one-vs-rest classes).
inline std::vector<double> rfe_weights(const Matrix& Z, const Vector& y, const Task& task, const SvmRfeConfig& cfg) {
  std::vector<double> w(static_cast<std::size_t>(Z.cols()), 0.0);
  if (!task.is_classification()) {
    const auto fit = ridge(Z, y, cfg.ridge_alpha);
    for (Index j = 0; j < Z.cols(); ++j) w[static_cast<std::size_t>(j)] = fit.coef(j, 0) * fit.coef(j, 0);
    return w;
  }
  const int outputs = task.n_classes == 2 ? 1 : task.n_classes;
  for (int c = 0; c < outputs; ++c) {
    const int positive = task.n_classes == 2 ? 1 : c;
    const Vector ypm = (y.array() == static_cast<double>(positive)).select(Vector::Ones(y.size()), -Vector::Ones(y.size()));
    const auto fit = linear_svm(Z, ypm, cfg.svm);
    for (Index j = 0; j < Z.cols(); ++j) w[static_cast<std::size_t>(j)] += fit.coef(j, 0) * fit.coef(j, 0);
  }
  return w;
}

}  // namespace detail

/**
 * Recursive feature elimination with a linear scorer (hinge SVM for
 * classification, ridge for regression). Each round drops the
 * ceil(step_fraction * survivors) features with the smallest squared weight;
 * ties eliminate the higher index first. The k-th feature eliminated gets
 * rank k, so the last survivor ranks highest; scores are ranks over their sum.
 */
inline ImportanceVector svm_rfe(const Matrix& X, const Vector& y, const Task& task, const SvmRfeConfig& cfg = {}) {
  if (!(cfg.step_fraction > 0.0 && cfg.step_fraction <= 1.0))
    throw Error(ErrorCode::precondition, "step_fraction must be in (0, 1]");
  const Matrix Z = Standardizer::fit(X).apply(X);
  const Index d = X.cols();
  std::vector<Index> alive = iota_indices(d);
  std::vector<double> rank(static_cast<std::size_t>(d), 0.0);
  int eliminated = 0;
  while (!alive.empty()) {
    Matrix sub(Z.rows(), static_cast<Index>(alive.size()));
    for (std::size_t c = 0; c < alive.size(); ++c) sub.col(static_cast<Index>(c)) = Z.col(alive[c]);
    const auto w = alive.size() == 1 ? std::vector<double>{0.0} : detail::rfe_weights(sub, y, task, cfg);
    std::vector<std::size_t> order(alive.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (w[a] != w[b]) return w[a] < w[b];
      return alive[a] > alive[b];
    });
    const auto drop = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(cfg.step_fraction * static_cast<double>(alive.size()) - 1e-12)));
    std::vector<bool> gone(alive.size(), false);
    for (std::size_t k = 0; k < std::min(drop, order.size()); ++k) {
      rank[static_cast<std::size_t>(alive[order[k]])] = ++eliminated;
      gone[order[k]] = true;
    }
    std::vector<Index> next;
    for (std::size_t c = 0; c < alive.size(); ++c)
      if (!gone[c]) next.push_back(alive[c]);
    alive = std::move(next);
  }
  auto out = make_importance("svm_rfe", rank);
  out.config["step_fraction"] = cfg.step_fraction;
  out.config["scorer"] = task.is_classification() ? "linear_svm" : "ridge";
  return out;
}

// ---------------------------------------------------------------------------
// Permutation importance

struct PermutationConfig {
  ForestParams forest;
  int repeats = 5;
  double holdout_fraction = 0.2;
};

/**
 * Random-forest permutation importance: fit on an internal split of the
 * given rows and measure, on the held-out remainder, the clamped drop of
 * macro-F1 / R^2 when one column is shuffled, averaged over repeats.
 */
inline ImportanceVector permutation_importance(const Matrix& X, const Vector& y, const Task& task,
                                               const PermutationConfig& cfg, std::uint64_t seed) {
  if (cfg.repeats < 1) throw Error(ErrorCode::precondition, "repeats must be >= 1");
  const auto [fit_rows, hold_rows] = holdout_split(X.rows(), cfg.holdout_fraction, derive_seed(seed, {1}));
  RandomForest rf;
  auto fp = cfg.forest;
  fp.seed = derive_seed(seed, {2});
  rf.fit(take_rows(X, fit_rows), take_rows(y, fit_rows), task, fp);
  const Matrix Xh = take_rows(X, hold_rows);
  const Vector yh = take_rows(y, hold_rows);
  const double baseline = task_score(task, yh, rf.predict(Xh));
  std::vector<double> raw(static_cast<std::size_t>(X.cols()), 0.0);
  for (Index j = 0; j < X.cols(); ++j) {
    Rng rng(derive_seed(seed, {3, static_cast<std::uint64_t>(j)}));
    double acc = 0.0;
    for (int r = 0; r < cfg.repeats; ++r) {
      Matrix Xp = Xh;
      std::vector<Index> perm = iota_indices(Xh.rows());
      std::shuffle(perm.begin(), perm.end(), rng);
      for (Index i = 0; i < Xh.rows(); ++i) Xp(i, j) = Xh(perm[static_cast<std::size_t>(i)], j);
      acc += std::max(0.0, baseline - task_score(task, yh, rf.predict(Xp)));
    }
    raw[static_cast<std::size_t>(j)] = acc / cfg.repeats;
  }
  auto out = make_importance("permutation_rf", raw);
  out.config["repeats"] = cfg.repeats;
  out.config["baseline_score"] = baseline;
  return out;
}

}  // namespace kanfs
