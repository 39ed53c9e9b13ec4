#include "kanfs/predictors.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace kanfs;
using namespace kanfs::testing;

namespace {

// The four XOR corners, each repeated.
void xor_data(Matrix& X, Vector& y, int reps = 5) {
  X.resize(4 * reps, 2);
  y.resize(4 * reps);
  for (int r = 0; r < reps; ++r)
    for (int c = 0; c < 4; ++c) {
      const int a = c & 1, b = (c >> 1) & 1;
      X(4 * r + c, 0) = a;
      X(4 * r + c, 1) = b;
      y[4 * r + c] = a ^ b;
    }
}

double tree_accuracy(const DecisionTree& t, const Matrix& X, const Vector& y) {
  int ok = 0;
  for (Index i = 0; i < X.rows(); ++i) {
    const auto& v = t.predict_row(X.row(i));
    ok += static_cast<double>(std::max_element(v.begin(), v.end()) - v.begin()) == y[i];
  }
  return ok / static_cast<double>(X.rows());
}

}  // namespace

TEST(DecisionTree, Depth2SolvesXor) {
  Matrix X;
  Vector y;
  xor_data(X, y);
  // Oracle: every single split of XOR leaves both children at Gini 0.5, so
  // no depth-1 tree beats 50%; a depth-2 tree can isolate all four corners.
  for (int f = 0; f < 2; ++f) {
    double n_left_pos = 0, n_left = 0;
    for (Index i = 0; i < X.rows(); ++i)
      if (X(i, f) <= 0.5) {
        n_left += 1;
        n_left_pos += y[i];
      }
    EXPECT_DOUBLE_EQ(n_left_pos / n_left, 0.5);
  }
  DecisionTree t;
  Rng rng(1);
  TreeParams p;
  p.max_depth = 2;
  t.fit(X, y, 2, true, iota_indices(X.rows()), p, rng);
  EXPECT_EQ(tree_accuracy(t, X, y), 1.0);
  EXPECT_EQ(t.depth(), 2);

  p.max_depth = 1;
  DecisionTree stump;
  stump.fit(X, y, 2, true, iota_indices(X.rows()), p, rng);
  EXPECT_EQ(tree_accuracy(stump, X, y), 0.5);
}

TEST(DecisionTree, TieBreakPrefersLowestFeature) {
  Matrix X(4, 3);
  X << 0, 5, 0, 0, 5, 0, 1, 7, 1, 1, 7, 1;  // columns 0, 1 and 2 all separate perfectly
  Vector y(4);
  y << 0, 0, 1, 1;
  DecisionTree t;
  Rng rng(1);
  t.fit(X, y, 2, true, iota_indices(4), TreeParams{}, rng);
  EXPECT_EQ(t.nodes()[0].feature, 0);
  EXPECT_DOUBLE_EQ(t.nodes()[0].threshold, 0.5);
}

TEST(DecisionTree, ConstantColumnNeverSplits) {
  Rng rng(2);
  Matrix X = random_matrix(60, 3, rng);
  X.col(1).setConstant(4.0);
  Vector y = X.col(0) + X.col(2);
  std::vector<double> imp(3, 0.0);
  DecisionTree t;
  t.fit(X, y, 1, false, iota_indices(60), TreeParams{}, rng, &imp);
  EXPECT_EQ(imp[1], 0.0);
  for (const auto& n : t.nodes()) EXPECT_NE(n.feature, 1);
}

TEST(RandomForest, SingleTreeWithoutSubsamplingEqualsCart) {
  Rng rng(3);
  const Matrix X = random_matrix(80, 4, rng);
  Vector y(80);
  for (Index i = 0; i < 80; ++i) y[i] = X(i, 0) + X(i, 1) > 0 ? 1 : 0;
  ForestParams fp;
  fp.n_trees = 1;
  fp.max_features = 4;
  fp.seed = 17;
  RandomForest rf;
  rf.fit(X, y, Task::classification(2), fp);

  Rng tree_rng(derive_seed(17, {0}));
  auto rows = bootstrap_rows(80, tree_rng);
  TreeParams tp;
  tp.max_depth = fp.max_depth;
  tp.max_features = 4;
  DecisionTree cart;
  cart.fit(X, y, 2, true, rows, tp, tree_rng);
  EXPECT_TRUE(rf.trees()[0] == cart);
}

TEST(RandomForest, ReproducibleAndInformative) {
  Rng rng(4);
  const Matrix X = random_matrix(200, 5, rng);
  Vector y(200);
  for (Index i = 0; i < 200; ++i) y[i] = X(i, 2) > 0.1 ? 1 : 0;
  ForestParams fp;
  fp.n_trees = 30;
  fp.seed = 5;
  RandomForest a, b;
  a.fit(X, y, Task::classification(2), fp);
  b.fit(X, y, Task::classification(2), fp);
  EXPECT_EQ(a.predict(X), b.predict(X));
  const auto& imp = a.impurity_importance();
  EXPECT_EQ(std::max_element(imp.begin(), imp.end()) - imp.begin(), 2);
}

TEST(GradientBoosting, SingleLeafPredictsMean) {
  Rng rng(6);
  const Matrix X = random_matrix(40, 3, rng);
  const Vector y = 3.0 * X.col(0).array() + 1.5;
  BoostingParams p;
  p.n_trees = 1;
  p.max_depth = 0;
  p.learning_rate = 1.0;
  GradientBoostedTrees g;
  g.fit(X, y, Task::regression(), p);
  const Vector pred = g.predict(X);
  for (Index i = 0; i < 40; ++i) EXPECT_NEAR(pred[i], y.mean(), 1e-12);
}

TEST(GradientBoosting, TrainingLossNonIncreasing) {
  Rng rng(7);
  const Matrix X = random_matrix(150, 4, rng);
  Vector yr = X.col(0).array().sin() + X.col(1).array().square();
  Vector yc(150);
  for (Index i = 0; i < 150; ++i) yc[i] = X(i, 0) > 0.3 ? 2 : (X(i, 1) > 0 ? 1 : 0);
  BoostingParams p;
  p.n_trees = 60;
  for (const auto& [task, y] : {std::pair{Task::regression(), yr}, std::pair{Task::classification(3), yc}}) {
    GradientBoostedTrees g;
    g.fit(X, y, task, p);
    const auto& h = g.loss_history();
    ASSERT_EQ(h.size(), 61u);
    for (std::size_t r = 1; r < h.size(); ++r) EXPECT_LE(h[r], h[r - 1] + 1e-12);
  }
}

TEST(Predictors, RidgeRecoversExactLinearData) {
  Rng rng(8);
  const Matrix X = random_matrix(100, 4, rng);
  Vector w(4);
  w << 1.0, -2.0, 0.5, 3.0;
  const Vector y = (X * w).array() + 0.7;
  PredictorSpec spec{PredictorKind::linear, {{"alpha", 1e-10}}};
  const auto m = fit(spec, Task::regression(), X, y, 0);
  EXPECT_GT(r2(y, predict(m, X)), 1.0 - 1e-6);
}

TEST(Predictors, RidgeRejectsNonPositiveAlpha) {
  PredictorSpec spec{PredictorKind::linear, {{"alpha", 0.0}}};
  EXPECT_THROW(fit(spec, Task::regression(), Matrix::Identity(3, 3), Vector::Ones(3), 0), Error);
}

TEST(Predictors, AllKindsLearnSimpleTasks) {
  Rng rng(9);
  const Matrix X = random_matrix(200, 3, rng);
  Vector yc(200);
  for (Index i = 0; i < 200; ++i) yc[i] = X(i, 0) > 0 ? 1 : 0;
  const Vector yr = 2.0 * X.col(1) - X.col(2);
  for (auto kind : {PredictorKind::linear, PredictorKind::random_forest, PredictorKind::gradient_boosted_trees}) {
    PredictorSpec spec{kind, {}};
    const auto mc = fit(spec, Task::classification(2), X, yc, 3);
    EXPECT_GT(macro_f1(yc, predict(mc, X), 2), 0.9) << to_string(kind);
    const auto mr = fit(spec, Task::regression(), X, yr, 3);
    EXPECT_GT(r2(yr, predict(mr, X)), 0.8) << to_string(kind);
    const auto again = fit(spec, Task::regression(), X, yr, 3);
    EXPECT_EQ(predict(mr, X), predict(again, X));
    EXPECT_FALSE(mr.to_json().empty());
  }
}

TEST(Predictors, KindNamesAndLabels) {
  EXPECT_EQ(predictor_kind_from_string("xgboost"), PredictorKind::gradient_boosted_trees);
  EXPECT_EQ(predictor_kind_from_string("ridge"), PredictorKind::linear);
  EXPECT_THROW(predictor_kind_from_string("svm"), Error);
  EXPECT_EQ(predictor_label(PredictorKind::linear, Task::classification(2)), "LogReg");
  EXPECT_EQ(predictor_label(PredictorKind::linear, Task::regression()), "Ridge");
}
