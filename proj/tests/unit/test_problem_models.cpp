#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "strigs/error.hpp"
#include "strigs/problem_models.hpp"

namespace strigs {
namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

std::vector<ConvexProblem> all_problems() {
  Mat A(3, 4);
  A << 1, 2, 0, -1, 0, 1, 1, 0, 2, 5, 1, -2;
  Vec b(3);
  b << 1, -1, 2;
  Mat anchors(2, 3);
  anchors << 1, 0, 0.5, 0, 2, -1;
  return {
      make_shifted_quadratic((Vec(3) << 0.5, -1, 2).finished()),
      make_least_squares(A, b),
      make_smoothed_norm(HuberParams{0.7, (Vec(3) << 0.2, 0, -1).finished(), 3}),
      make_smoothed_norm(LogSumExpParams{0.5, anchors}),
      make_zero_problem(3),
  };
}

TEST(ShiftedQuadratic, GradientAndArgmin) {
  const auto q = make_shifted_quadratic(v2(1, 0));
  EXPECT_TRUE(q.grad(v2(0, 0)).isApprox(v2(-1, 0)));
  EXPECT_TRUE(q.regularized_argmin(0.25).isApprox(v2(0.8, 0)));
  EXPECT_EQ(q.lipschitz(), 1.0);
  EXPECT_EQ(q.inf_value(), 0.0);
  EXPECT_TRUE(q.min_norm_minimizer()->isApprox(v2(1, 0)));
  for (double e : {1e-6, 1e-3, 0.5, 2.0}) {
    EXPECT_NEAR((q.regularized_argmin(e) - v2(1, 0)).norm(), e / (1 + e), 1e-15);
  }
}

TEST(LeastSquares, SingularMinNorm) {
  Mat A(2, 2);
  A << 1, 0, 0, 0;
  const auto ls = make_least_squares(A, v2(1, 1));
  EXPECT_NEAR((*ls.min_norm_minimizer() - v2(1, 0)).norm(), 0.0, 1e-14);
  for (double e : {1e-4, 0.1, 1.0}) {
    EXPECT_NEAR((ls.regularized_argmin(e) - v2(1 / (1 + e), 0)).norm(), 0.0, 1e-14);
  }
  EXPECT_NEAR(ls.inf_value(), 0.5, 1e-14);
}

TEST(LeastSquares, Identity) {
  const auto ls = make_least_squares(Mat::Identity(2, 2), v2(2, 3));
  EXPECT_NEAR(ls.lipschitz(), 1.0, 1e-14);
  EXPECT_NEAR((*ls.min_norm_minimizer() - v2(2, 3)).norm(), 0.0, 1e-14);
  EXPECT_NEAR(ls.inf_value(), 0.0, 1e-14);
}

TEST(LeastSquares, DimensionMismatch) {
  try {
    make_least_squares(Mat::Identity(2, 2), Vec::Ones(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
  EXPECT_THROW(make_least_squares(Mat::Zero(2, 2), Vec::Ones(2)), Error);
}

TEST(SmoothedNorm, HuberRegions) {
  const auto h = make_smoothed_norm(HuberParams{1.0, Vec(), 1});
  EXPECT_NEAR(h.grad(Vec::Constant(1, 0.5))[0], 0.5, 1e-15);
  EXPECT_NEAR(h.grad(Vec::Constant(1, 3.0))[0], 1.0, 1e-15);
  EXPECT_NEAR(h.grad(Vec::Constant(1, -3.0))[0], -1.0, 1e-15);
  EXPECT_EQ(h.min_norm_minimizer()->norm(), 0.0);
}

TEST(SmoothedNorm, LogSumExpSymmetric) {
  Mat anchors = Mat::Identity(2, 2);
  const auto f = make_smoothed_norm(LogSumExpParams{1.0, anchors});
  EXPECT_NEAR(f.grad(Vec::Zero(2)).norm(), 0.0, 1e-15);
  EXPECT_NEAR(f.eval(Vec::Zero(2)), std::log(4.0), 1e-15);
  EXPECT_NEAR(f.inf_value(), std::log(4.0), 1e-15);
}

TEST(SmoothedNorm, RejectsNonpositiveSmoothing) {
  EXPECT_THROW(make_smoothed_norm(HuberParams{0.0, Vec(), 2}), Error);
  EXPECT_THROW(make_smoothed_norm(LogSumExpParams{-1.0, Mat::Identity(2, 2)}), Error);
}

TEST(ProblemProperties, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n01;
  for (const auto& p : all_problems()) {
    for (int k = 0; k < 100; ++k) {
      Vec x(p.dim());
      for (auto& v : x) v = 2.0 * n01(rng);
      const Vec fd = oracle::fd_gradient([&](const Vec& z) { return p.eval(z); }, x);
      const Vec g = p.grad(x);
      EXPECT_LE((fd - g).norm(), 1e-5 * std::max(1.0, g.norm())) << p.name();
    }
  }
}

TEST(ProblemProperties, ConvexAndLipschitzOnSamples) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n01;
  for (const auto& p : all_problems()) {
    for (int k = 0; k < 1000; ++k) {
      Vec x(p.dim()), y(p.dim());
      for (auto& v : x) v = 3.0 * n01(rng);
      for (auto& v : y) v = 3.0 * n01(rng);
      const double mid = p.eval(0.5 * (x + y));
      EXPECT_LE(mid, 0.5 * p.eval(x) + 0.5 * p.eval(y) + 1e-12 * (1 + std::abs(mid)))
          << p.name();
      EXPECT_LE((p.grad(x) - p.grad(y)).norm(), p.lipschitz() * (x - y).norm() * (1 + 1e-12))
          << p.name();
    }
  }
}

TEST(ProblemProperties, MinimizerIsStationary) {
  for (const auto& p : all_problems()) {
    ASSERT_TRUE(p.min_norm_minimizer().has_value()) << p.name();
    const Vec& xs = *p.min_norm_minimizer();
    EXPECT_LE(p.grad(xs).norm(), 1e-10) << p.name();
    EXPECT_NEAR(p.eval(xs), p.inf_value(), 1e-10) << p.name();
  }
}

TEST(ProblemProperties, TikhonovNormMonotoneAndBounded) {
  for (const auto& p : all_problems()) {
    if (!p.has_regularized_argmin()) continue;
    const double xs = p.min_norm_minimizer()->norm();
    double prev = 0.0;
    for (int k = 0; k <= 60; ++k) {
      const double e = std::pow(10.0, 2.0 - 0.1 * k);  // decreasing eps
      const double n = p.regularized_argmin(e).norm();
      EXPECT_GE(n, prev - 1e-13) << p.name();
      EXPECT_LE(n, xs + 1e-12) << p.name();
      prev = n;
    }
  }
}

TEST(ProblemProperties, NoClosedFormThrows) {
  const auto h = make_smoothed_norm(HuberParams{1.0, Vec(), 2});
  EXPECT_FALSE(h.has_regularized_argmin());
  EXPECT_THROW(h.regularized_argmin(0.1), Error);
}

}  // namespace
}  // namespace strigs
