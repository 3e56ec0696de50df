#include <gtest/gtest.h>

#include <random>

#include "ihpe/linalg.hpp"

using namespace ihpe;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Vector random_vector(std::mt19937_64& rng, Index n, double scale = 1.0) {
  std::normal_distribution<double> N(0.0, scale);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = N(rng);
  return v;
}

}  // namespace

TEST(Inner, Examples) {
  EXPECT_EQ(linalg::inner(vec({1, 0}), vec({0, 1})), 0.0);
  EXPECT_EQ(linalg::inner(vec({2, 3}), vec({2, 3})), 13.0);
  EXPECT_EQ(linalg::inner(vec({1, 2, 3}), vec({4, 5, 6})), 32.0);
}

TEST(Inner, DimensionMismatchIsUsageError) {
  EXPECT_THROW(linalg::inner(vec({1, 2}), vec({1, 2, 3})), UsageError);
  EXPECT_THROW(linalg::convex_combine(0.5, vec({1}), vec({1, 2})), UsageError);
}

TEST(Inner, SymmetricBilinearAndNorm) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 100; ++t) {
    const Vector a = random_vector(rng, 7), b = random_vector(rng, 7), c = random_vector(rng, 7);
    EXPECT_NEAR(linalg::inner(a, b), linalg::inner(b, a), 1e-14);
    EXPECT_NEAR(linalg::inner(2.5 * a + c, b), 2.5 * linalg::inner(a, b) + linalg::inner(c, b), 1e-12);
    EXPECT_NEAR(linalg::norm(a), std::sqrt(linalg::inner(a, a)), 1e-14);
  }
}

TEST(Inner, CompensatedAboveThresholdMatchesLongDouble) {
  std::mt19937_64 rng(2);
  const Index n = 50000;
  const Vector a = random_vector(rng, n, 1e3), b = random_vector(rng, n, 1e-3);
  long double ref = 0;
  for (Index i = 0; i < n; ++i) ref += static_cast<long double>(a[i]) * b[i];
  EXPECT_NEAR(linalg::inner(a, b), static_cast<double>(ref), 1e-12 * std::abs(static_cast<double>(ref)) + 1e-12);
}

TEST(CompensatedSum, RecoversCancelledTerms) {
  linalg::CompensatedSum s;
  s.add(1.0);
  s.add(1e100);
  s.add(1.0);
  s.add(-1e100);
  EXPECT_EQ(s.value(), 2.0);
}

TEST(ConvexCombine, Examples) {
  const Vector w = vec({3, -1}), z = vec({0.5, 7});
  EXPECT_EQ(linalg::convex_combine(1.0, w, z), w);
  EXPECT_EQ(linalg::convex_combine(0.0, w, z), z);
  EXPECT_EQ(linalg::convex_combine(0.5, vec({2, 0}), vec({0, 2})), vec({1, 1}));
}

TEST(ConvexCombine, NormIdentityForAnyRealWeight) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> P(-3.0, 4.0);
  for (int t = 0; t < 500; ++t) {
    const double p = P(rng);
    const Vector w = random_vector(rng, 9), z = random_vector(rng, 9);
    const double lhs = linalg::norm_sq(linalg::convex_combine(p, w, z));
    const double rhs = p * linalg::norm_sq(w) + (1 - p) * linalg::norm_sq(z) -
                       p * (1 - p) * linalg::dist_sq(w, z);
    EXPECT_LE(std::abs(lhs - rhs), 1e-10 * (1 + std::abs(rhs)));
  }
}

TEST(Inequalities, UsedInTheErgodicProof) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 500; ++t) {
    const Vector a = random_vector(rng, 6, 2.0), b = random_vector(rng, 6, 0.5);
    EXPECT_LE(linalg::dist_sq(a, b), 2 * (linalg::norm_sq(a) + linalg::norm_sq(b)) + 1e-12);
    EXPECT_LE(linalg::norm_sq(a) - linalg::norm_sq(b), 2 * linalg::norm(a) * linalg::dist(a, b) + 1e-12);
  }
}

TEST(Finite, RejectsNanAndInf) {
  EXPECT_TRUE(linalg::all_finite(vec({1, 2})));
  EXPECT_FALSE(linalg::all_finite(vec({1, NAN})));
  EXPECT_THROW(linalg::require_finite(vec({INFINITY}), "x"), Error);
}

TEST(SpectralNorm, MatchesSvd) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    Matrix m(6, 4);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = random_vector(rng, 1)[0];
    Eigen::JacobiSVD<Matrix> svd(m);
    EXPECT_NEAR(linalg::spectral_norm(m), svd.singularValues()[0], 1e-12);
  }
}
