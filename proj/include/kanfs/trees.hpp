#pragma once

/**
 * @file trees.hpp
 * @brief CART trees, bagged random forests and stagewise gradient boosting.
 *
 * Splits use Gini impurity (classification) or variance (regression) with
 * midpoint thresholds between consecutive distinct values. Candidates are
 * scanned by ascending feature index and ascending threshold and only a
 * strictly better split replaces the incumbent, so ties resolve to the lowest
 * feature index and then the lowest threshold. A node that is impure and can
 * be split is split even when the best gain is zero.
 */

#include "kanfs/core.hpp"

#include <nlohmann/json.hpp>

#include <numeric>

namespace kanfs {

struct TreeParams {
  int max_depth = 8;
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  int max_features = 0;  // features examined per node; 0 = all
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> value;  // class distribution or {mean}
  double samples = 0.0;
};

class DecisionTree {
 public:
  /**
   * Grows a tree on the (possibly repeated) rows `rows` of `X`.
   *
   * For classification `y` holds labels in [0, n_outputs); for regression
   * `n_outputs` must be 1. `importance`, when given, accumulates the
   * sample-weighted impurity decrease of every split per feature.
   */
  void fit(const Matrix& X, const Vector& y, int n_outputs, bool classification, std::vector<Index> rows,
           const TreeParams& params, Rng& rng, std::vector<double>* importance = nullptr) {
    if (rows.empty()) throw Error(ErrorCode::invalid_size, "cannot grow a tree on zero rows");
    X_ = &X;
    y_ = &y;
    classification_ = classification;
    n_outputs_ = classification ? n_outputs : 1;
    params_ = params;
    rng_ = &rng;
    importance_ = importance;
    total_rows_ = static_cast<double>(rows.size());
    nodes_.clear();
    leaf_rows_.clear();
    grow(rows, 0);
    X_ = nullptr;
    y_ = nullptr;
    rng_ = nullptr;
    importance_ = nullptr;
  }

  [[nodiscard]] int leaf_index(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    int node = 0;
    while (nodes_[node].feature >= 0)
      node = x[nodes_[node].feature] <= nodes_[node].threshold ? nodes_[node].left : nodes_[node].right;
    return node;
  }

  [[nodiscard]] const std::vector<double>& predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    return nodes_[leaf_index(x)].value;
  }

  [[nodiscard]] std::vector<TreeNode>& nodes() { return nodes_; }
  [[nodiscard]] const std::vector<TreeNode>& nodes() const { return nodes_; }

  /// Training rows that reached each leaf (indexed by node id; empty for internal nodes).
  [[nodiscard]] const std::vector<std::vector<Index>>& leaf_rows() const { return leaf_rows_; }

  [[nodiscard]] int depth() const { return depth_from(0); }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& n : nodes_)
      arr.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right},
                     {"value", n.value}, {"samples", n.samples}});
    return arr;
  }

  friend bool operator==(const DecisionTree& a, const DecisionTree& b) { return a.to_json() == b.to_json(); }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = -1.0;
  };

  [[nodiscard]] int depth_from(int node) const {
    if (nodes_[node].feature < 0) return 0;
    return 1 + std::max(depth_from(nodes_[node].left), depth_from(nodes_[node].right));
  }

  // n * impurity of a node given summary statistics.
  [[nodiscard]] double weighted_impurity(const std::vector<double>& stats, double n) const {
    if (n <= 0) return 0.0;
    if (classification_) {
      double sq = 0.0;
      for (double c : stats) sq += c * c;
      return n - sq / n;
    }
    return std::max(0.0, stats[1] - stats[0] * stats[0] / n);
  }

  [[nodiscard]] std::vector<double> empty_stats() const {
    return std::vector<double>(classification_ ? static_cast<std::size_t>(n_outputs_) : 2u, 0.0);
  }

  void add_row(std::vector<double>& stats, Index row, double sign) const {
    const double v = (*y_)[row];
    if (classification_)
      stats[static_cast<std::size_t>(v)] += sign;
    else {
      stats[0] += sign * v;
      stats[1] += sign * v * v;
    }
  }

  int grow(std::vector<Index>& rows, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    leaf_rows_.emplace_back();
    auto stats = empty_stats();
    for (Index r : rows) add_row(stats, r, 1.0);
    const double n = static_cast<double>(rows.size());
    const double node_imp = weighted_impurity(stats, n);
    {
      TreeNode& node = nodes_[id];
      node.samples = n;
      if (classification_) {
        node.value.resize(static_cast<std::size_t>(n_outputs_));
        for (int c = 0; c < n_outputs_; ++c) node.value[c] = stats[c] / n;
      } else {
        node.value = {stats[0] / n};
      }
    }

    const bool can_split = depth < params_.max_depth && rows.size() >= static_cast<std::size_t>(params_.min_samples_split) &&
                           node_imp > 1e-12 * std::max(1.0, n);
    Split best;
    if (can_split) best = find_split(rows, stats, node_imp);
    if (best.feature < 0) {
      leaf_rows_[id] = rows;
      return id;
    }

    std::vector<Index> left, right;
    for (Index r : rows) ((*X_)(r, best.feature) <= best.threshold ? left : right).push_back(r);
    if (importance_) (*importance_)[static_cast<std::size_t>(best.feature)] += best.gain;
    std::vector<Index>().swap(rows);
    nodes_[id].feature = best.feature;
    nodes_[id].threshold = best.threshold;
    const int l = grow(left, depth + 1);
    nodes_[id].left = l;
    const int r = grow(right, depth + 1);
    nodes_[id].right = r;
    return id;
  }

  std::vector<int> candidate_features() {
    const int d = static_cast<int>(X_->cols());
    std::vector<int> feats(static_cast<std::size_t>(d));
    std::iota(feats.begin(), feats.end(), 0);
    const int k = params_.max_features;
    if (k > 0 && k < d) {
      // Partial Fisher-Yates draw, then restore ascending order for the tie rule.
      for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<int> pick(i, d - 1);
        std::swap(feats[static_cast<std::size_t>(i)], feats[static_cast<std::size_t>(pick(*rng_))]);
      }
      feats.resize(static_cast<std::size_t>(k));
      std::sort(feats.begin(), feats.end());
    }
    return feats;
  }

  Split find_split(const std::vector<Index>& rows, const std::vector<double>& total, double node_imp) {
    Split best;
    const auto n = rows.size();
    const auto min_leaf = static_cast<std::size_t>(std::max(1, params_.min_samples_leaf));
    std::vector<std::pair<double, Index>> order(n);
    for (int f : candidate_features()) {
      for (std::size_t i = 0; i < n; ++i) order[i] = {(*X_)(rows[i], f), rows[i]};
      std::sort(order.begin(), order.end(),
                [](const auto& a, const auto& b) { return a.first < b.first || (a.first == b.first && a.second < b.second); });
      if (order.front().first == order.back().first) continue;
      auto left = empty_stats();
      auto right = total;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        add_row(left, order[i].second, 1.0);
        add_row(right, order[i].second, -1.0);
        if (order[i].first == order[i + 1].first) continue;
        const std::size_t nl = i + 1, nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double gain = node_imp - weighted_impurity(left, static_cast<double>(nl)) -
                            weighted_impurity(right, static_cast<double>(nr));
        const double tol = 1e-12 * std::max(1.0, std::abs(node_imp));
        if (best.feature < 0 || gain > best.gain + tol) {
          best.feature = f;
          best.threshold = 0.5 * (order[i].first + order[i + 1].first);
          // Midpoints can round onto the right value for adjacent doubles.
          if (!(best.threshold < order[i + 1].first)) best.threshold = order[i].first;
          best.gain = gain;
        }
      }
    }
    if (best.feature >= 0) best.gain = std::max(0.0, best.gain);
    return best;
  }

  const Matrix* X_ = nullptr;
  const Vector* y_ = nullptr;
  bool classification_ = false;
  int n_outputs_ = 1;
  TreeParams params_;
  Rng* rng_ = nullptr;
  std::vector<double>* importance_ = nullptr;
  double total_rows_ = 0.0;
  std::vector<TreeNode> nodes_;
  std::vector<std::vector<Index>> leaf_rows_;
};

inline std::vector<Index> bootstrap_rows(Index n, Rng& rng) {
  std::uniform_int_distribution<Index> pick(0, n - 1);
  std::vector<Index> rows(static_cast<std::size_t>(n));
  for (auto& r : rows) r = pick(rng);
  return rows;
}

struct ForestParams {
  int n_trees = 100;
  int max_depth = 8;
  int min_samples_leaf = 1;
  int max_features = 0;  // 0 = sqrt(d) for classification, d/3 for regression
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

inline int default_max_features(const Task& task, Index d) {
  if (task.is_classification()) return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(d)))));
  return std::max(1, static_cast<int>(d / 3));
}

class RandomForest {
 public:
  void fit(const Matrix& X, const Vector& y, const Task& task, const ForestParams& params) {
    if (params.n_trees < 1) throw Error(ErrorCode::precondition, "forest needs at least one tree");
    check_labels(y, task);
    task_ = task;
    TreeParams tp;
    tp.max_depth = params.max_depth;
    tp.min_samples_leaf = params.min_samples_leaf;
    tp.max_features = params.max_features > 0 ? params.max_features : default_max_features(task, X.cols());
    importance_.assign(static_cast<std::size_t>(X.cols()), 0.0);
    trees_.assign(static_cast<std::size_t>(params.n_trees), DecisionTree{});
    for (int t = 0; t < params.n_trees; ++t) {
      Rng rng(derive_seed(params.seed, {static_cast<std::uint64_t>(t)}));
      auto rows = params.bootstrap ? bootstrap_rows(X.rows(), rng) : iota_indices(X.rows());
      trees_[static_cast<std::size_t>(t)].fit(X, y, task.output_dim(), task.is_classification(), std::move(rows), tp,
                                               rng, &importance_);
    }
  }

  /// Mean class distribution (n x C) or mean prediction (n x 1).
  [[nodiscard]] Matrix predict_raw(const Matrix& X) const {
    Matrix out = Matrix::Zero(X.rows(), task_.output_dim());
    for (Index i = 0; i < X.rows(); ++i) {
      for (const auto& t : trees_) {
        const auto& v = t.predict_row(X.row(i));
        for (std::size_t c = 0; c < v.size(); ++c) out(i, static_cast<Index>(c)) += v[c];
      }
    }
    return out / static_cast<double>(trees_.size());
  }

  [[nodiscard]] Vector predict(const Matrix& X) const {
    const Matrix raw = predict_raw(X);
    if (!task_.is_classification()) return raw.col(0);
    Vector out(X.rows());
    for (Index i = 0; i < X.rows(); ++i) {
      Index arg;
      raw.row(i).maxCoeff(&arg);
      out[i] = static_cast<double>(arg);
    }
    return out;
  }

  /// Total impurity decrease per feature (unnormalized).
  [[nodiscard]] const std::vector<double>& impurity_importance() const { return importance_; }
  [[nodiscard]] const std::vector<DecisionTree>& trees() const { return trees_; }
  [[nodiscard]] const Task& task() const { return task_; }

 private:
  Task task_;
  std::vector<DecisionTree> trees_;
  std::vector<double> importance_;
};

struct BoostingParams {
  int n_trees = 200;
  int max_depth = 3;
  double learning_rate = 0.1;
  int min_samples_leaf = 1;
  std::uint64_t seed = 0;
};

/// Stagewise boosting of regression trees on loss gradients (squared loss or multinomial log-loss).
class GradientBoostedTrees {
 public:
  void fit(const Matrix& X, const Vector& y, const Task& task, const BoostingParams& params) {
    if (params.n_trees < 0) throw Error(ErrorCode::precondition, "n_trees must be >= 0");
    if (!(params.learning_rate > 0.0)) throw Error(ErrorCode::precondition, "learning_rate must be > 0");
    check_labels(y, task);
    task_ = task;
    learning_rate_ = params.learning_rate;
    const Index n = X.rows();
    const int C = task.is_classification() ? task.n_classes : 1;
    TreeParams tp;
    tp.max_depth = params.max_depth;
    tp.min_samples_leaf = params.min_samples_leaf;
    Rng rng(params.seed);

    init_.assign(static_cast<std::size_t>(C), 0.0);
    if (task.is_classification()) {
      std::vector<double> counts(static_cast<std::size_t>(C), 0.0);
      for (Index i = 0; i < n; ++i) counts[static_cast<std::size_t>(y[i])] += 1.0;
      for (int c = 0; c < C; ++c) init_[c] = std::log(std::max(counts[c], 1e-3) / static_cast<double>(n));
    } else {
      init_[0] = y.mean();
    }
    Matrix F(n, C);
    for (int c = 0; c < C; ++c) F.col(c).setConstant(init_[c]);
    rounds_.clear();
    loss_history_.assign(1, training_loss(F, y));

    const auto all_rows = iota_indices(n);
    for (int round = 0; round < params.n_trees; ++round) {
      std::vector<DecisionTree> trees(static_cast<std::size_t>(C));
      const Matrix P = task.is_classification() ? softmax(F) : Matrix();
      for (int c = 0; c < C; ++c) {
        Vector residual(n);
        for (Index i = 0; i < n; ++i) {
          if (task.is_classification())
            residual[i] = (static_cast<int>(y[i]) == c ? 1.0 : 0.0) - P(i, c);
          else
            residual[i] = y[i] - F(i, 0);
        }
        auto& tree = trees[static_cast<std::size_t>(c)];
        tree.fit(X, residual, 1, false, all_rows, tp, rng);
        if (task.is_classification()) {
          // One Newton step per leaf for the multinomial deviance.
          const double scale = static_cast<double>(C - 1) / C;
          auto& nodes = tree.nodes();
          for (std::size_t id = 0; id < nodes.size(); ++id) {
            if (nodes[id].feature >= 0) continue;
            double num = 0.0, den = 0.0;
            for (Index r : tree.leaf_rows()[id]) {
              num += residual[r];
              den += std::abs(residual[r]) * (1.0 - std::abs(residual[r]));
            }
            nodes[id].value = {den > 1e-12 ? scale * num / den : 0.0};
          }
        }
        for (Index i = 0; i < n; ++i) F(i, c) += learning_rate_ * tree.predict_row(X.row(i))[0];
      }
      rounds_.push_back(std::move(trees));
      loss_history_.push_back(training_loss(F, y));
    }
  }

  [[nodiscard]] Matrix decision_function(const Matrix& X) const {
    const int C = static_cast<int>(init_.size());
    Matrix F(X.rows(), C);
    for (int c = 0; c < C; ++c) F.col(c).setConstant(init_[static_cast<std::size_t>(c)]);
    for (const auto& trees : rounds_)
      for (int c = 0; c < C; ++c)
        for (Index i = 0; i < X.rows(); ++i)
          F(i, c) += learning_rate_ * trees[static_cast<std::size_t>(c)].predict_row(X.row(i))[0];
    return F;
  }

  [[nodiscard]] Vector predict(const Matrix& X) const {
    const Matrix F = decision_function(X);
    if (!task_.is_classification()) return F.col(0);
    Vector out(X.rows());
    for (Index i = 0; i < X.rows(); ++i) {
      Index arg;
      F.row(i).maxCoeff(&arg);
      out[i] = static_cast<double>(arg);
    }
    return out;
  }

  /// Mean training loss after 0, 1, ..., n_trees rounds.
  [[nodiscard]] const std::vector<double>& loss_history() const { return loss_history_; }
  [[nodiscard]] std::size_t rounds() const { return rounds_.size(); }

 private:
  static Matrix softmax(const Matrix& F) {
    Matrix P(F.rows(), F.cols());
    for (Index i = 0; i < F.rows(); ++i) {
      const double mx = F.row(i).maxCoeff();
      P.row(i) = (F.row(i).array() - mx).exp();
      P.row(i) /= P.row(i).sum();
    }
    return P;
  }

  double training_loss(const Matrix& F, const Vector& y) const {
    const Index n = F.rows();
    if (!task_.is_classification()) return (F.col(0) - y).squaredNorm() / static_cast<double>(n);
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double mx = F.row(i).maxCoeff();
      total += mx + std::log((F.row(i).array() - mx).exp().sum()) - F(i, static_cast<Index>(y[i]));
    }
    return total / static_cast<double>(n);
  }

  Task task_;
  double learning_rate_ = 0.1;
  std::vector<double> init_;
  std::vector<std::vector<DecisionTree>> rounds_;
  std::vector<double> loss_history_;
};

}  // namespace kanfs
