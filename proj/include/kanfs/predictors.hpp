#pragma once

// Downstream predictors used to score a feature subset.

#include "kanfs/linear.hpp"
#include "kanfs/metrics.hpp"
#include "kanfs/trees.hpp"

#include <variant>

namespace kanfs {

enum class PredictorKind { linear, random_forest, gradient_boosted_trees };

inline std::string_view to_string(PredictorKind k) {
  switch (k) {
    case PredictorKind::linear: return "linear";
    case PredictorKind::random_forest: return "random_forest";
    case PredictorKind::gradient_boosted_trees: return "gradient_boosted_trees";
  }
  return "linear";
}

/// Accepts the canonical names plus the short table labels; "xgboost" maps to the internal booster.
inline PredictorKind predictor_kind_from_string(std::string_view s) {
  if (s == "linear" || s == "ridge" || s == "logreg" || s == "logistic") return PredictorKind::linear;
  if (s == "random_forest" || s == "rf") return PredictorKind::random_forest;
  if (s == "gradient_boosted_trees" || s == "gbt" || s == "gb" || s == "xgboost" || s == "xgb")
    return PredictorKind::gradient_boosted_trees;
  throw Error(ErrorCode::config, "unknown predictor '" + std::string(s) + "'");
}

/// Row label used in result tables.
inline std::string predictor_label(PredictorKind k, const Task& task) {
  switch (k) {
    case PredictorKind::linear: return task.is_classification() ? "LogReg" : "Ridge";
    case PredictorKind::random_forest: return "RF";
    case PredictorKind::gradient_boosted_trees: return "GB";
  }
  return "?";
}

struct PredictorSpec {
  PredictorKind kind = PredictorKind::linear;
  nlohmann::json hyperparameters = nlohmann::json::object();

  friend bool operator==(const PredictorSpec&, const PredictorSpec&) = default;
};

class PredictorModel {
 public:
  [[nodiscard]] Vector predict(const Matrix& X) const {
    return std::visit([&](const auto& m) { return predict_impl(m, X); }, model_);
  }

  [[nodiscard]] const Task& task() const { return task_; }
  [[nodiscard]] PredictorKind kind() const { return kind_; }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json j;
    j["kind"] = std::string(to_string(kind_));
    j["task"] = std::string(to_string(task_.kind));
    if (const auto* lin = std::get_if<LinearFit>(&model_)) {
      j["coef"] = std::vector<double>(lin->coef.data(), lin->coef.data() + lin->coef.size());
      j["coef_shape"] = {lin->coef.rows(), lin->coef.cols()};
      j["intercept"] = std::vector<double>(lin->intercept.data(), lin->intercept.data() + lin->intercept.size());
    } else if (const auto* rf = std::get_if<RandomForest>(&model_)) {
      j["trees"] = nlohmann::json::array();
      for (const auto& t : rf->trees()) j["trees"].push_back(t.to_json());
    } else {
      j["rounds"] = std::get<GradientBoostedTrees>(model_).rounds();
    }
    return j;
  }

  friend PredictorModel fit(const PredictorSpec& spec, const Task& task, const Matrix& X, const Vector& y,
                            std::uint64_t seed);

 private:
  Vector predict_impl(const LinearFit& m, const Matrix& X) const {
    const Matrix Z = (X * m.coef).rowwise() + m.intercept.transpose();
    if (!task_.is_classification()) return Z.col(0);
    Vector out(X.rows());
    for (Index i = 0; i < X.rows(); ++i) {
      Index arg;
      Z.row(i).maxCoeff(&arg);
      out[i] = static_cast<double>(arg);
    }
    return out;
  }
  Vector predict_impl(const RandomForest& m, const Matrix& X) const { return m.predict(X); }
  Vector predict_impl(const GradientBoostedTrees& m, const Matrix& X) const { return m.predict(X); }

  Task task_;
  PredictorKind kind_ = PredictorKind::linear;
  std::variant<LinearFit, RandomForest, GradientBoostedTrees> model_;
};

namespace detail {

template <class T>
T hp(const nlohmann::json& h, const char* key, T fallback) {
  if (!h.contains(key)) return fallback;
  try {
    return h.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::config, std::string("hyperparameter '") + key + "' has the wrong type");
  }
}

}  // namespace detail

inline ForestParams forest_params_from(const nlohmann::json& h, std::uint64_t seed, int default_depth) {
  ForestParams p;
  p.n_trees = detail::hp(h, "n_trees", 100);
  p.max_depth = detail::hp(h, "max_depth", default_depth);
  p.min_samples_leaf = detail::hp(h, "min_samples_leaf", 1);
  p.max_features = detail::hp(h, "max_features", 0);
  p.bootstrap = detail::hp(h, "bootstrap", true);
  p.seed = seed;
  return p;
}

/**
 * Fits `spec` on (X, y). Linear: ridge (alpha, default 1) or multinomial
 * logistic (l2, iterations). Random forest: 100 trees of depth <= 10 by
 * default. Boosting: 200 trees, depth 3, shrinkage 0.1 by default.
 */
inline PredictorModel fit(const PredictorSpec& spec, const Task& task, const Matrix& X, const Vector& y,
                          std::uint64_t seed) {
  if (X.rows() != y.size()) throw Error(ErrorCode::dimension_mismatch, "predictor: X and y row counts differ");
  if (X.rows() == 0) throw Error(ErrorCode::invalid_size, "predictor: no training rows");
  check_labels(y, task);
  const auto& h = spec.hyperparameters;
  PredictorModel out;
  out.task_ = task;
  out.kind_ = spec.kind;
  switch (spec.kind) {
    case PredictorKind::linear:
      if (task.is_classification()) {
        LogisticParams p;
        p.l2 = detail::hp(h, "l2", p.l2);
        p.iterations = detail::hp(h, "iterations", p.iterations);
        p.learning_rate = detail::hp(h, "learning_rate", p.learning_rate);
        out.model_ = logistic_regression(X, y, task.n_classes, p);
      } else {
        out.model_ = ridge(X, y, detail::hp(h, "alpha", 1.0));
      }
      break;
    case PredictorKind::random_forest: {
      RandomForest rf;
      rf.fit(X, y, task, forest_params_from(h, seed, 10));
      out.model_ = std::move(rf);
      break;
    }
    case PredictorKind::gradient_boosted_trees: {
      BoostingParams p;
      p.n_trees = detail::hp(h, "n_trees", p.n_trees);
      p.max_depth = detail::hp(h, "max_depth", p.max_depth);
      p.learning_rate = detail::hp(h, "learning_rate", p.learning_rate);
      p.min_samples_leaf = detail::hp(h, "min_samples_leaf", p.min_samples_leaf);
      p.seed = seed;
      GradientBoostedTrees gbt;
      gbt.fit(X, y, task, p);
      out.model_ = std::move(gbt);
      break;
    }
  }
  return out;
}

inline Vector predict(const PredictorModel& model, const Matrix& X) { return model.predict(X); }

}  // namespace kanfs
