#include "kanfs/data.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace kanfs;

namespace {

Dataset parse(const std::string& text, SchemaHints hints) {
  std::istringstream in(text);
  return parse_csv(in, hints);
}

ErrorCode parse_error(const std::string& text, SchemaHints hints) {
  try {
    parse(text, std::move(hints));
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::precondition;
}

}  // namespace

TEST(Csv, NumericRegression) {
  const auto ds = parse("a,b,y\n1,2,3.5\n4,5,6\n", {.target = "y"});
  EXPECT_EQ(ds.task.kind, TaskKind::regression);
  EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(ds.X(1, 0), 4.0);
  EXPECT_EQ(ds.y[0], 3.5);
  EXPECT_TRUE(ds.onehot_groups.empty());
}

TEST(Csv, CategoricalTargetAndOneHot) {
  const auto ds = parse("color,x,label\nred,1,no\n\"blue\",2,yes\ngreen,3,no\nred,4,yes\r\n", {.target = "label"});
  EXPECT_EQ(ds.task.kind, TaskKind::classification);
  EXPECT_EQ(ds.task.n_classes, 2);
  EXPECT_EQ(ds.class_names, (std::vector<std::string>{"no", "yes"}));
  EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"color=blue", "color=green", "color=red", "x"}));
  ASSERT_EQ(ds.onehot_groups.size(), 3u);
  EXPECT_EQ(ds.onehot_groups.at(0), "color");
  EXPECT_EQ(ds.X(0, 2), 1.0);
  EXPECT_EQ(ds.X(1, 0), 1.0);
  EXPECT_EQ(ds.X.row(3).sum(), 5.0);
  EXPECT_EQ(ds.y[1], 1.0);
}

TEST(Csv, QuotedFieldsWithCommasAndQuotes) {
  const auto ds = parse("name,v,y\n\"a, \"\"x\"\"\",1,0\nb,2,1\n", {.target = "y", .task = TaskKind::classification});
  EXPECT_EQ(ds.feature_names[0], "name=a, \"x\"");
  EXPECT_EQ(ds.task.n_classes, 2);
}

TEST(Csv, ForcedCategoricalAndDrop) {
  const auto ds = parse("id,zip,y\n1,100,0.5\n2,200,1.5\n", {.target = "y", .categorical = {"zip"}, .drop = {"id"}});
  EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"zip=100", "zip=200"}));
}

TEST(Csv, NumericClassLabelsSortNumerically) {
  const auto ds = parse("x,y\n1,10\n2,2\n3,10\n", {.target = "y", .task = TaskKind::classification});
  EXPECT_EQ(ds.class_names, (std::vector<std::string>{"2", "10"}));
  EXPECT_EQ(ds.y[0], 1.0);
}

TEST(Csv, Errors) {
  EXPECT_EQ(parse_error("", {.target = "y"}), ErrorCode::empty_file);
  EXPECT_EQ(parse_error("a,y\n", {.target = "y"}), ErrorCode::empty_file);
  EXPECT_EQ(parse_error("a,b\n1,2\n", {.target = "y"}), ErrorCode::missing_target);
  EXPECT_EQ(parse_error("a,y\n1,2\n3\n", {.target = "y"}), ErrorCode::inconsistent_column_count);
  EXPECT_EQ(parse_error("a,y\n1,2\nfoo,3\n", {.target = "y", .categorical = {}}), ErrorCode::malformed_value);
  EXPECT_EQ(parse_error("a,y\n1,2\n,3\n", {.target = "y"}), ErrorCode::malformed_value);
  EXPECT_EQ(parse_error("a,y\n\"1,2\n", {.target = "y"}), ErrorCode::malformed_value);
  try {
    parse("a,y\n1,2\n1,2\nx,3\n", {.target = "y"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);
  }
}

TEST(Csv, WriteThenReadRoundTrips) {
  auto ds = make_regression({.n = 20, .d = 3, .n_informative = 2, .seed = 4});
  std::ostringstream out;
  write_csv(out, ds);
  const auto back = parse(out.str(), {.target = "target"});
  EXPECT_EQ(back.X, ds.X);
  EXPECT_EQ(back.y, ds.y);
  EXPECT_EQ(back.feature_names, ds.feature_names);
}

TEST(Synthetic, ClassificationShapeBalanceAndDeterminism) {
  const ClassificationSpec spec{.n = 300, .d = 12, .n_informative = 4, .n_classes = 3, .seed = 7};
  const auto a = make_classification(spec);
  const auto b = make_classification(spec);
  EXPECT_EQ(a.X, b.X);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.X.rows(), 300);
  EXPECT_EQ(a.X.cols(), 12);
  for (int c = 0; c < 3; ++c) EXPECT_EQ((a.y.array() == c).count(), 100);
  ASSERT_TRUE(a.informative);
  EXPECT_EQ(a.informative->size(), 4u);
  a.validate();
}

TEST(Synthetic, ClassificationInformativeColumnsSeparateClasses) {
  const auto ds = make_classification({.n = 2000, .d = 6, .n_informative = 2, .n_classes = 2, .class_sep = 2.0, .seed = 1});
  for (Index j = 0; j < 6; ++j) {
    double m0 = 0, m1 = 0;
    for (Index i = 0; i < ds.rows(); ++i) (ds.y[i] == 0 ? m0 : m1) += ds.X(i, j);
    const double gap = std::abs(m0 - m1) / 1000.0;
    const bool informative = std::find(ds.informative->begin(), ds.informative->end(), j) != ds.informative->end();
    if (informative)
      EXPECT_NEAR(gap, 4.0, 0.3);
    else
      EXPECT_LT(gap, 0.3);
  }
}

TEST(Synthetic, RegressionIsExactlyLinearOnInformativeColumns) {
  const auto ds = make_regression({.n = 200, .d = 8, .n_informative = 3, .seed = 2});
  const Vector w = (ds.X.transpose() * ds.X).ldlt().solve(ds.X.transpose() * ds.y);
  for (Index j = 0; j < 8; ++j) {
    const bool informative = std::find(ds.informative->begin(), ds.informative->end(), j) != ds.informative->end();
    if (informative) {
      EXPECT_GT(w[j], 0.0);
      EXPECT_LT(w[j], 100.0);
    } else {
      EXPECT_NEAR(w[j], 0.0, 1e-9);
    }
  }
}

TEST(Synthetic, InvalidDims) {
  EXPECT_THROW(make_regression({.n = 10, .d = 3, .n_informative = 4}), Error);
  EXPECT_THROW(make_classification({.n = 10, .d = 3, .n_informative = 2, .n_classes = 1}), Error);
}
