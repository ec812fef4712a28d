#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "strigs/quadrature.hpp"

namespace strigs {
namespace {

TEST(Simpson, ExactForCubics) {
  auto f = [](double x) { return 3 * x * x * x - x + 2; };
  EXPECT_NEAR(simpson(f, -1.0, 2.0, 2), 3.0 * 15.0 / 4.0 - 1.5 + 6.0, 1e-13);
  EXPECT_NEAR(simpson(f, -1.0, 2.0, 3), 3.0 * 15.0 / 4.0 - 1.5 + 6.0, 1e-13);
}

TEST(SimpsonLog, PowerLaw) {
  auto f = [](double s) { return std::pow(s, -1.5); };
  const double exact = 2.0 * (1.0 - 1.0 / std::sqrt(1e4));
  EXPECT_NEAR(simpson_log(f, 1.0, 1e4, 512), exact, 1e-9);
  EXPECT_EQ(simpson_log(f, 3.0, 3.0, 8), 0.0);
}

TEST(SimpsonLogRefined, ResolvesAndReportsIntervals) {
  auto f = [](double s) { return std::exp(-s) * s; };
  const auto r = simpson_log_refined(f, 0.5, 20.0, 1e-10);
  EXPECT_TRUE(r.resolved);
  const double exact = (1.5 * std::exp(-0.5)) - (21.0 * std::exp(-20.0));
  EXPECT_NEAR(r.value, exact, 1e-9);
  const auto coarse = simpson_log_refined(f, 0.5, 20.0, 1e-30, 4, 8);
  EXPECT_FALSE(coarse.resolved);
}

TEST(IntegrateToInfinity, ConvergentAndDivergent) {
  const auto c = integrate_to_infinity([](double s) { return 1.0 / (s * s); }, 2.0);
  EXPECT_TRUE(c.converged);
  EXPECT_NEAR(c.value, 0.5, 1e-10);
  const auto d = integrate_to_infinity([](double s) { return 1.0 / s; }, 1.0);
  EXPECT_FALSE(d.converged);
  const auto z = integrate_to_infinity([](double) { return 0.0; }, 1.0);
  EXPECT_TRUE(z.converged);
  EXPECT_EQ(z.value, 0.0);
}

TEST(PairwiseSum, OrderFixedAndAccurate) {
  std::vector<double> v;
  for (int i = 0; i < 1000; ++i) v.push_back(1.0 / (i + 1));
  double naive = 0.0;
  for (double x : v) naive += x;
  EXPECT_NEAR(pairwise_sum(v), naive, 1e-12);
  EXPECT_EQ(pairwise_sum(v), pairwise_sum(v));
  EXPECT_EQ(pairwise_sum(std::vector<double>{}), 0.0);
}

}  // namespace
}  // namespace strigs
