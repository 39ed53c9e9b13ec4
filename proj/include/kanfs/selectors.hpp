#pragma once

// Uniform front end over every feature selector: spec parsing, display
// labels and a single run_selector entry point used by the pipeline and CLI.

#include "kanfs/baselines.hpp"
#include "kanfs/kan_importance.hpp"
#include "kanfs/predictors.hpp"

#include <array>

namespace kanfs {

enum class SelectorKind { mi, lasso, rf_importance, svm_rfe, permutation_rf, kan_l1, kan_l2, kan_ko, kan_si, all_features };

inline constexpr std::array<SelectorKind, 9> kSelectorRoster = {
    SelectorKind::kan_ko,        SelectorKind::kan_l1,  SelectorKind::kan_l2,
    SelectorKind::kan_si,        SelectorKind::lasso,   SelectorKind::mi,
    SelectorKind::permutation_rf, SelectorKind::rf_importance, SelectorKind::svm_rfe};

inline std::string_view to_string(SelectorKind k) {
  switch (k) {
    case SelectorKind::mi: return "mi";
    case SelectorKind::lasso: return "lasso";
    case SelectorKind::rf_importance: return "rf_importance";
    case SelectorKind::svm_rfe: return "svm_rfe";
    case SelectorKind::permutation_rf: return "permutation_rf";
    case SelectorKind::kan_l1: return "kan_l1";
    case SelectorKind::kan_l2: return "kan_l2";
    case SelectorKind::kan_ko: return "kan_ko";
    case SelectorKind::kan_si: return "kan_si";
    case SelectorKind::all_features: return "all_features";
  }
  return "all_features";
}

inline SelectorKind selector_kind_from_string(std::string_view s) {
  for (auto k : kSelectorRoster)
    if (to_string(k) == s) return k;
  if (s == "all_features") return SelectorKind::all_features;
  throw Error(ErrorCode::config, "unknown selector '" + std::string(s) + "'");
}

/// Column header used in result tables.
inline std::string selector_label(SelectorKind k) {
  switch (k) {
    case SelectorKind::mi: return "Mutual Info";
    case SelectorKind::lasso: return "LASSO/L1";
    case SelectorKind::rf_importance: return "Random Forest";
    case SelectorKind::svm_rfe: return "SVM-RFE";
    case SelectorKind::permutation_rf: return "Perm. (RF)";
    case SelectorKind::kan_l1: return "KAN-L1";
    case SelectorKind::kan_l2: return "KAN-L2";
    case SelectorKind::kan_ko: return "KAN-KO";
    case SelectorKind::kan_si: return "KAN-SI";
    case SelectorKind::all_features: return "All Features";
  }
  return "?";
}

inline bool is_kan_selector(SelectorKind k) {
  return k == SelectorKind::kan_l1 || k == SelectorKind::kan_l2 || k == SelectorKind::kan_ko ||
         k == SelectorKind::kan_si;
}

struct SelectorSpec {
  SelectorKind kind = SelectorKind::all_features;
  nlohmann::json hyperparameters = nlohmann::json::object();

  friend bool operator==(const SelectorSpec&, const SelectorSpec&) = default;
};

inline std::vector<SelectorSpec> default_selectors() {
  std::vector<SelectorSpec> out;
  for (auto k : kSelectorRoster) out.push_back({k, nlohmann::json::object()});
  return out;
}

/// Importance as reported plus the scores actually used for ranking (they differ only on fallback).
struct SelectorResult {
  ImportanceVector importance;
  std::vector<double> ranking;
};

// ---------------------------------------------------------------------------
// KAN selector settings

struct KanSelectorConfig {
  ModelSpec model;
  TrainConfig train;
  bool include_base = true;
  SensitivityConfig sensitivity;
  double delta_floor = 1e-12;
  double inner_holdout = 0.2;
  int max_retries = 6;  // learning-rate halvings after a divergent run

  KanSelectorConfig() {
    train.epochs = 300;
    train.learning_rate = 0.2;
    train.momentum = 0.9;
    train.l2_penalty = 1e-2;
  }
};

inline KanSelectorConfig kan_selector_config(const nlohmann::json& h) {
  using detail::hp;
  KanSelectorConfig c;
  c.model.hidden = hp(h, "hidden", c.model.hidden);
  c.model.degree = hp(h, "degree", c.model.degree);
  c.model.grid_size = hp(h, "grid_size", c.model.grid_size);
  c.model.hidden_range = hp(h, "hidden_range", c.model.hidden_range);
  c.model.activation = activation_from_string(hp<std::string>(h, "activation", std::string(to_string(c.model.activation))));
  c.train.epochs = hp(h, "epochs", c.train.epochs);
  c.train.learning_rate = hp(h, "learning_rate", c.train.learning_rate);
  c.train.momentum = hp(h, "momentum", c.train.momentum);
  c.train.l2_penalty = hp(h, "l2", c.train.l2_penalty);
  c.train.batch_size = hp(h, "batch_size", c.train.batch_size);
  c.include_base = hp(h, "include_base", c.include_base);
  c.sensitivity.scale = spread_scale_from_string(hp<std::string>(h, "scale", std::string(to_string(c.sensitivity.scale))));
  c.delta_floor = hp(h, "delta", c.delta_floor);
  c.inner_holdout = hp(h, "inner_holdout", c.inner_holdout);
  c.max_retries = hp(h, "max_retries", c.max_retries);
  if (c.max_retries < 0) throw Error(ErrorCode::config, "max_retries must be >= 0");
  if (!(c.inner_holdout > 0.0 && c.inner_holdout < 1.0))
    throw Error(ErrorCode::config, "inner_holdout must be in (0, 1)");
  c.train.validate();
  return c;
}

/// Knockout ranking; an all-zero knockout vector is ranked by the same model's L2 scores instead.
inline SelectorResult with_knockout_fallback(ImportanceVector ko, const ImportanceVector& l2) {
  if (!ko.all_zero) {
    auto ranking = ko.scores;
    return {std::move(ko), std::move(ranking)};
  }
  ko.flags.emplace_back("ranking_fallback_kan_l2");
  return {std::move(ko), l2.scores};
}

namespace detail {

// Regression targets are z-scored with the training statistics.
inline Vector standardized_target(const Vector& y, const Vector& reference) {
  const double sd = column_std(reference);
  return (y.array() - reference.mean()) / (sd > 1e-12 ? sd : 1.0);
}

struct FittedKan {
  KanModel model;
  double learning_rate = 0.0;
};

// Trains from a seeded initialization; a divergent run is retried with half the step.
inline FittedKan fit_kan(const KanSelectorConfig& cfg, const Matrix& X, const Vector& y, const Task& task,
                         std::uint64_t seed) {
  const Vector target = task.is_classification() ? y : standardized_target(y, y);
  TrainConfig tc = cfg.train;
  tc.seed = derive_seed(seed, {11});
  const auto init = make_model(cfg.model, X, task, derive_seed(seed, {10}));
  for (int attempt = 0;; ++attempt) {
    try {
      return {train(init, X, target, tc).model, tc.learning_rate};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::non_finite_loss || attempt >= cfg.max_retries) throw;
      tc.learning_rate *= 0.5;
    }
  }
}

inline ImportanceVector annotate(ImportanceVector iv, const FittedKan& fit) {
  iv.config["learning_rate"] = fit.learning_rate;
  return iv;
}

inline SelectorResult run_kan_selector(SelectorKind kind, const KanSelectorConfig& cfg, const DataSlice& train,
                                       const Task& task, const std::map<Index, std::string>& groups,
                                       std::uint64_t seed) {
  if (kind == SelectorKind::kan_l1 || kind == SelectorKind::kan_l2) {
    const auto fitted = fit_kan(cfg, train.X, train.y, task, seed);
    auto iv = annotate(kind == SelectorKind::kan_l1 ? importance_l1(fitted.model, cfg.include_base)
                                                    : importance_l2(fitted.model, cfg.include_base),
                       fitted);
    return {iv, iv.scores};
  }
  // Knockout and sensitivity are evaluated on an inner split held out from KAN training.
  const auto [fit_rows, hold_rows] = holdout_split(train.X.rows(), cfg.inner_holdout, derive_seed(seed, {12}));
  const Matrix Xf = take_rows(train.X, fit_rows);
  const Vector yf = take_rows(train.y, fit_rows);
  const auto fitted = fit_kan(cfg, Xf, yf, task, seed);
  const auto& model = fitted.model;
  DataSlice eval{take_rows(train.X, hold_rows), take_rows(train.y, hold_rows), Provenance::holdout};
  if (!task.is_classification()) eval.y = standardized_target(eval.y, yf);
  if (kind == SelectorKind::kan_si) {
    SensitivityConfig sc = cfg.sensitivity;
    sc.onehot_groups = groups;
    auto iv = annotate(importance_si(model, eval, sc), fitted);
    return {iv, iv.scores};
  }
  auto ko = importance_ko(model, eval, cfg.delta_floor);
  ko.importance.config["inner_holdout"] = cfg.inner_holdout;
  return with_knockout_fallback(annotate(std::move(ko.importance), fitted), importance_l2(model, cfg.include_base));
}

}  // namespace detail

/**
 * Fits one selector on `train` (which must carry fit provenance: selectors
 * only ever see training-fold rows) and returns its importance vector.
 * `groups` maps one-hot encoded columns to their source column.
 */
inline SelectorResult run_selector(const SelectorSpec& spec, const DataSlice& train, const Task& task,
                                   const std::map<Index, std::string>& groups, std::uint64_t seed) {
  if (train.provenance != Provenance::fit)
    throw Error(ErrorCode::leakage, "selectors may only be fitted on training data, got " +
                                        std::string(to_string(train.provenance)));
  if (train.X.rows() != train.y.size()) throw Error(ErrorCode::dimension_mismatch, "selector: X and y row counts differ");
  check_labels(train.y, task);
  const auto& h = spec.hyperparameters;
  const Index d = train.X.cols();
  auto wrap = [](ImportanceVector iv) {
    auto ranking = iv.scores;
    return SelectorResult{std::move(iv), std::move(ranking)};
  };
  switch (spec.kind) {
    case SelectorKind::all_features: {
      return wrap(make_importance("all_features", std::vector<double>(static_cast<std::size_t>(d), 1.0)));
    }
    case SelectorKind::mi:
      return wrap(mi_rank(train.X, train.y, task, detail::hp(h, "bins", 8)));
    case SelectorKind::lasso: {
      LassoSelectConfig c;
      if (h.contains("lambda")) c.lambda = detail::hp(h, "lambda", 0.0);
      c.cv_folds = detail::hp(h, "cv_folds", c.cv_folds);
      c.grid_points = detail::hp(h, "grid_points", c.grid_points);
      c.grid_ratio = detail::hp(h, "grid_ratio", c.grid_ratio);
      c.solver.tolerance = detail::hp(h, "tolerance", c.solver.tolerance);
      c.solver.max_sweeps = detail::hp(h, "max_sweeps", c.solver.max_sweeps);
      return wrap(lasso_select(train.X, train.y, task, c, seed));
    }
    case SelectorKind::rf_importance: {
      auto fp = forest_params_from(h, seed, 8);
      return wrap(rf_importance(train.X, train.y, task, fp));
    }
    case SelectorKind::svm_rfe: {
      SvmRfeConfig c;
      c.step_fraction = detail::hp(h, "step_fraction", c.step_fraction);
      c.svm.regularization = detail::hp(h, "svm_regularization", c.svm.regularization);
      c.svm.iterations = detail::hp(h, "svm_iterations", c.svm.iterations);
      c.ridge_alpha = detail::hp(h, "ridge_alpha", c.ridge_alpha);
      return wrap(svm_rfe(train.X, train.y, task, c));
    }
    case SelectorKind::permutation_rf: {
      PermutationConfig c;
      c.forest = forest_params_from(h, seed, 8);
      c.repeats = detail::hp(h, "repeats", c.repeats);
      c.holdout_fraction = detail::hp(h, "holdout_fraction", c.holdout_fraction);
      return wrap(permutation_importance(train.X, train.y, task, c, seed));
    }
    case SelectorKind::kan_l1:
    case SelectorKind::kan_l2:
    case SelectorKind::kan_ko:
    case SelectorKind::kan_si:
      return detail::run_kan_selector(spec.kind, kan_selector_config(h), train, task, groups, seed);
  }
  throw Error(ErrorCode::config, "unhandled selector");
}

}  // namespace kanfs
