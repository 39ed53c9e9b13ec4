#include "kanfs/spline.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace kanfs;

TEST(BuildKnots, ConstantBasis) {
  const auto kv = build_knots(0, 1, 1, 0);
  EXPECT_EQ(std::vector<double>(kv.knots().begin(), kv.knots().end()), (std::vector<double>{0, 1}));
  EXPECT_EQ(kv.num_basis(), 1);
}

TEST(BuildKnots, HatFunctions) {
  const auto kv = build_knots(0, 2, 2, 1);
  EXPECT_EQ(std::vector<double>(kv.knots().begin(), kv.knots().end()), (std::vector<double>{0, 0, 1, 2, 2}));
  EXPECT_EQ(kv.num_basis(), 3);
}

TEST(BuildKnots, BasisCountIsGridPlusDegree) {
  EXPECT_EQ(build_knots(0, 1, 5, 3).num_basis(), 8);
  EXPECT_EQ(build_knots(-2, 7, 11, 2).num_basis(), 13);
}

TEST(BuildKnots, Errors) {
  try {
    build_knots(1, 1, 3, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_range);
  }
  try {
    build_knots(0, 1, 0, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_size);
  }
  EXPECT_THROW(KnotVector({0, 0.5, 1, 1}, 1), Error);  // not clamped on the left
}

TEST(KnotsForValues, ConstantColumnIsWidened) {
  std::vector<double> col(5, 2.0);
  const auto kv = knots_for_values(col, 5, 3);
  EXPECT_DOUBLE_EQ(kv.lo(), 1.5);
  EXPECT_DOUBLE_EQ(kv.hi(), 2.5);
}

TEST(EvalBasis, LinearHat) {
  const auto b = eval_basis(build_knots(0, 2, 2, 1), 0.5);
  ASSERT_EQ(b.values.size(), 3u);
  EXPECT_NEAR(b.values[0], 0.5, 1e-15);
  EXPECT_NEAR(b.values[1], 0.5, 1e-15);
  EXPECT_EQ(b.values[2], 0.0);
}

TEST(EvalBasis, ClampedEndpoints) {
  const auto kv = build_knots(-1, 3, 5, 3);
  const auto lo = eval_basis(kv, -1);
  const auto hi = eval_basis(kv, 3);
  for (int k = 0; k < kv.num_basis(); ++k) {
    EXPECT_EQ(lo.values[k], k == 0 ? 1.0 : 0.0);
    EXPECT_EQ(hi.values[k], k == kv.num_basis() - 1 ? 1.0 : 0.0);
  }
}

TEST(EvalBasis, OutOfDomainClamps) {
  const auto kv = build_knots(0, 1, 4, 3);
  const auto below = eval_basis(kv, -5.0);
  const auto at = eval_basis(kv, 0.0);
  EXPECT_EQ(below.values, at.values);
  for (double d : below.derivatives) EXPECT_EQ(d, 0.0);
  const auto above = eval_basis(kv, 9.0);
  EXPECT_EQ(above.values, eval_basis(kv, 1.0).values);
}

TEST(EvalBasis, DerivativeMatchesFiniteDifferenceAtFixedPoint) {
  const auto kv = build_knots(0, 1, 5, 3);
  const double x = 0.37, h = 1e-5;
  const auto b = eval_basis(kv, x);
  const auto bp = eval_basis(kv, x + h);
  const auto bm = eval_basis(kv, x - h);
  for (int k = 0; k < kv.num_basis(); ++k) EXPECT_NEAR(b.derivatives[k], (bp.values[k] - bm.values[k]) / (2 * h), 1e-6);
}

class BasisProperties : public ::testing::TestWithParam<int> {};

TEST_P(BasisProperties, PartitionSupportNonnegativityDerivatives) {
  const int degree = GetParam();
  const auto kv = build_knots(-2.0, 3.0, 7, degree);
  Rng rng(1234 + degree);
  std::uniform_real_distribution<double> u(-2.0, 3.0);
  const double h = 1e-5;
  for (int trial = 0; trial < 500; ++trial) {
    const double x = u(rng);
    const auto b = eval_basis(kv, x);
    const double sum = std::accumulate(b.values.begin(), b.values.end(), 0.0);
    EXPECT_NEAR(sum, 1.0, 1e-12);
    int nonzero = 0;
    for (double v : b.values) {
      EXPECT_GE(v, 0.0);
      nonzero += v > 0.0;
    }
    EXPECT_LE(nonzero, degree + 1);
    const double dsum = std::accumulate(b.derivatives.begin(), b.derivatives.end(), 0.0);
    EXPECT_NEAR(dsum, 0.0, 1e-10);
    if (degree >= 2) {
      const auto bp = eval_basis(kv, x + h);
      const auto bm = eval_basis(kv, x - h);
      for (int k = 0; k < kv.num_basis(); ++k)
        EXPECT_NEAR(b.derivatives[k], (bp.values[k] - bm.values[k]) / (2 * h), 1e-6);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Degrees, BasisProperties, ::testing::Values(0, 1, 2, 3, 4));

TEST(ExpandBatch, ClampedEndpointsRow) {
  std::vector<KnotVector> kv{build_knots(0, 2, 2, 1), build_knots(-1, 1, 2, 1)};
  Matrix X(1, 2);
  X << 0, -1;
  const Matrix B = expand_batch(kv, X);
  Matrix expected(1, 6);
  expected << 1, 0, 0, 1, 0, 0;
  EXPECT_EQ(B, expected);
}

TEST(ExpandBatch, BlocksSumToOneAndMatchElementwise) {
  Rng rng(7);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::vector<KnotVector> kv{build_knots(-1, 1, 5, 3), build_knots(-1, 0.5, 5, 3), build_knots(0, 1, 5, 3)};
  Matrix X(4, 3);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 3; ++j) X(i, j) = u(rng);
  const Matrix B = expand_batch(kv, X);
  const int K = 8;
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 3; ++j) {
      EXPECT_NEAR(B.block(i, j * K, 1, K).sum(), 1.0, 1e-12);
      const auto b = eval_basis(kv[j], X(i, j));
      for (int k = 0; k < K; ++k) EXPECT_EQ(B(i, j * K + k), b.values[k]);
    }
}

TEST(ExpandBatch, DimensionMismatch) {
  std::vector<KnotVector> kv{build_knots(0, 1, 2, 1)};
  try {
    expand_batch(kv, Matrix::Zero(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::dimension_mismatch);
  }
  std::vector<KnotVector> mixed{build_knots(0, 1, 2, 1), build_knots(0, 1, 3, 1)};
  EXPECT_THROW(expand_batch(mixed, Matrix::Zero(2, 2)), Error);
}
