#include <cmath>
#include <algorithm>
#include <cstdlib>
#include <limits>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "strigs/error.hpp"
#include "strigs/experiments.hpp"

namespace strigs {
namespace {

EnsembleSetup quadratic_setup(double sigma_alpha, int n, double T) {
  const auto eps = EpsilonSchedule::power(1.0, 1.0);
  const auto q = make_shifted_quadratic(Vec::Constant(2, 0.5));
  EnsembleSetup s{SystemSpec{q, StrigsParams{eps, 2.0},
                              sigma_alpha > 0 ? exp_diffusion(1.0, sigma_alpha, 2)
                                              : DiffusionSchedule::zero(2)}};
  DampingParams d;
  d.t1 = 9.0;
  s.damping = d;
  s.init.t = 1.0;
  s.init.x = Vec::Ones(2);
  s.init.y = Vec::Zero(2);
  s.T = T;
  s.h = 0.01;
  s.n_paths = n;
  s.master_seed = 11;
  s.checkpoints = log_checkpoints(1.0, T, 16);
  s.workers = 1;
  return s;
}

EnsembleSetup noisy_setup(int n) {
  auto s = quadratic_setup(0.0, n, 20.0);
  s.system.sigma = power_diffusion(0.5, 0.0, 2);
  return s;
}

TEST(Ensemble, NoiseFreePathsAreIdentical) {
  const auto res = run_ensemble(quadratic_setup(0.0, 4, 50.0));
  for (Metric m : {Metric::kFGap, Metric::kDistSq, Metric::kYNorm, Metric::kEnergy}) {
    const auto& s = res.metric(m);
    for (std::size_t k = 0; k < res.checkpoints.size(); ++k) {
      for (int i = 1; i < 4; ++i) EXPECT_EQ(s.per_path[i][k], s.per_path[0][k]);
      EXPECT_EQ(s.se[k], 0.0);
    }
  }
}

TEST(Ensemble, SinglePathMeanEqualsPath) {
  const auto res = run_ensemble(noisy_setup(1));
  const auto& s = res.metric(Metric::kFGap);
  for (std::size_t k = 0; k < res.checkpoints.size(); ++k) {
    EXPECT_EQ(s.mean[k], s.per_path[0][k]);
    EXPECT_EQ(s.se[k], 0.0);
  }
}

TEST(Ensemble, MeansAreRecomputableFromPaths) {
  const auto res = run_ensemble(noisy_setup(32));
  const auto& s = res.metric(Metric::kDistSq);
  for (std::size_t k = 0; k < res.checkpoints.size(); ++k) {
    double sum = 0.0;
    for (const auto& p : s.per_path) sum += p[k];
    EXPECT_NEAR(s.mean[k], sum / 32.0, 1e-12 * (1.0 + std::abs(s.mean[k])));
  }
}

TEST(Ensemble, StandardErrorShrinksWithPaths) {
  const auto a = run_ensemble(noisy_setup(64));
  const auto b = run_ensemble(noisy_setup(256));
  const double ratio = b.metric(Metric::kDistSq).se.back() / a.metric(Metric::kDistSq).se.back();
  EXPECT_GT(ratio, 0.5 / 1.5);
  EXPECT_LT(ratio, 0.5 * 1.5);
}

TEST(Ensemble, WorkerCountDoesNotChangeResults) {
  auto s = noisy_setup(16);
  s.workers = 1;
  const auto a = run_ensemble(s);
  s.workers = 4;
  const auto b = run_ensemble(s);
  for (int m = 0; m < 4; ++m) {
    EXPECT_EQ(a.metrics[m].mean, b.metrics[m].mean);
    EXPECT_EQ(a.metrics[m].se, b.metrics[m].se);
  }
  for (int i = 0; i < 16; ++i) EXPECT_EQ(a.paths[i].x_final, b.paths[i].x_final);
}

TEST(Ensemble, SeedsFollowDerivation) {
  auto s = noisy_setup(4);
  s.antithetic = true;
  const auto res = run_ensemble(s);
  EXPECT_EQ(res.paths[0].seed, derive_seed(11, 0));
  EXPECT_EQ(res.paths[1].seed, derive_seed(11, 0));
  EXPECT_EQ(res.paths[2].seed, derive_seed(11, 1));
  EXPECT_FALSE(res.paths[0].antithetic);
  EXPECT_TRUE(res.paths[1].antithetic);
}

TEST(Ensemble, NonfinitePathsThrow) {
  auto s = quadratic_setup(0.0, 2, 1e4);
  s.system = SystemSpec{make_shifted_quadratic(Vec::Zero(2)), HeavyBallParams{0.0},
                        DiffusionSchedule::zero(2)};
  s.damping.reset();
  s.h = 10.0;
  s.scheme = Scheme::kExplicit;
  try {
    run_ensemble(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonfiniteState);
  }
}

TEST(Ensemble, NoLemmaViolationsOnQuadratic) {
  const auto res = run_ensemble(noisy_setup(8));
  for (const auto& p : res.paths) EXPECT_EQ(p.lemma_violations, 0);
}

TEST(FitRate, SyntheticPowerLaw) {
  std::vector<double> t, v, c;
  for (int k = 0; k <= 40; ++k) {
    t.push_back(std::pow(10.0, 2.0 + k / 20.0));
    v.push_back(3.0 / (t.back() * t.back()));
    c.push_back(5.0);
  }
  const auto fit = fit_rate(t, v, "f_gap", 1e2, 1e4, -1.0, 0.1);
  EXPECT_NEAR(fit.slope, -2.0, 1e-6);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-9);
  EXPECT_EQ(fit.n_points, 41);
  EXPECT_TRUE(fit.pass);
  const auto flat = fit_rate(t, c, "f_gap", 1e2, 1e4, -1.0, 0.1);
  EXPECT_NEAR(flat.slope, 0.0, 1e-9);
  EXPECT_FALSE(flat.pass);
}

TEST(FitRate, WindowTooSmall) {
  std::vector<double> t{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<double> v(t.size(), 1.0);
  try {
    fit_rate(t, v, "f_gap", 2.0, 5.0, -1.0, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kWindowTooSmall);
  }
}

TEST(FitRate, FloorsZeros) {
  std::vector<double> t, v;
  for (int k = 0; k < 10; ++k) {
    t.push_back(k + 1.0);
    v.push_back(k < 2 ? 0.0 : 1.0);
  }
  const auto fit = fit_rate(t, v, "f_gap", 1.0, 10.0, -1.0, 0.1);
  EXPECT_EQ(fit.floored, 2);
  EXPECT_TRUE(std::isfinite(fit.slope));
}

TEST(ExpectedSlope, Table) {
  EXPECT_DOUBLE_EQ(expected_slope(Metric::kFGap, 1.0), -1.0);
  EXPECT_DOUBLE_EQ(expected_slope(Metric::kDistSq, 1.0), -0.5);
  EXPECT_DOUBLE_EQ(expected_slope(Metric::kYNorm, 1.0), -0.75);
  EXPECT_DOUBLE_EQ(expected_slope(Metric::kYNorm, 0.5), -0.5);
  EXPECT_DOUBLE_EQ(expected_slope(Metric::kEnergy, 1.0), -1.5);
}

TEST(BoundCheck, InfiniteBoundAlwaysHolds) {
  EnsembleResult res;
  res.n_paths = 2;
  res.checkpoints = {9.0, 20.0};
  res.metrics[static_cast<int>(Metric::kEnergy)].mean = {1.0, 1e6};
  res.metrics[static_cast<int>(Metric::kEnergy)].se = {0.0, 0.0};
  BoundCurve curve;
  curve.t = {9.0, 20.0};
  curve.weak = {2.0, std::numeric_limits<double>::infinity()};
  curve.strong = curve.weak;
  const auto rows = check_expectation_bound(res, curve, false);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_TRUE(rows[0].ok);
  EXPECT_TRUE(rows[1].ok);
  res.metrics[static_cast<int>(Metric::kEnergy)].mean[0] = 3.0;
  EXPECT_FALSE(check_expectation_bound(res, curve, false)[0].ok);
}

TEST(BoundCheck, NoiseFreeEnsembleBelowBound) {
  auto s = quadratic_setup(0.0, 1, 300.0);
  s.checkpoints.push_back(9.0);
  std::sort(s.checkpoints.begin(), s.checkpoints.end());
  const auto res = run_ensemble(s);
  std::vector<double> grid;
  for (double t : res.checkpoints)
    if (t >= 9.0) grid.push_back(t);
  const EnergyModel m{s.system.problem, *s.system.eps(), *s.damping, s.system.sigma};
  const double e1 = res.metric(Metric::kEnergy).mean[res.checkpoints.size() - grid.size()];
  const auto curve = expectation_bound_curve(m, grid, e1);
  for (const auto& row : check_expectation_bound(res, curve, true)) EXPECT_TRUE(row.ok) << row.t;
}

TEST(Martingale, AntitheticLinearProxyIsExactlyZero) {
  auto s = quadratic_setup(0.5, 16, 40.0);
  s.system.sigma = power_diffusion(0.3, 0.0, 2);
  s.antithetic = true;
  s.martingale = true;
  const auto res = run_ensemble(s);
  std::vector<double> lin;
  for (const auto& p : res.paths) lin.push_back(p.martingale_linear);
  for (int k = 0; k < 8; ++k) EXPECT_EQ(lin[2 * k] + lin[2 * k + 1], 0.0);
  const auto mc = martingale_mean_check(lin);
  EXPECT_EQ(mc.mean, 0.0);
}

TEST(Martingale, NoiseFreeProxyIsZero) {
  auto s = quadratic_setup(0.0, 2, 40.0);
  s.martingale = true;
  const auto res = run_ensemble(s);
  for (const auto& p : res.paths) {
    EXPECT_EQ(p.martingale, 0.0);
    EXPECT_EQ(p.martingale_linear, 0.0);
  }
}

TEST(Martingale, MeanCheckStatistics) {
  const auto mc = martingale_mean_check({1.0, -1.0, 1.0, -1.0});
  EXPECT_EQ(mc.mean, 0.0);
  EXPECT_NEAR(mc.se, std::sqrt(4.0 / 3.0) / 2.0, 1e-15);
  EXPECT_TRUE(mc.ok);
  EXPECT_FALSE(martingale_mean_check({1.0, 1.1, 0.9, 1.0}).ok);
}

TEST(MinNorm, LeastSquaresWithKernel) {
  Mat A(2, 2);
  A << 1, 0, 0, 0;
  const Vec b = (Vec(2) << 1, 1).finished();
  const auto eps = EpsilonSchedule::power(1.0, 1.0);
  EnsembleSetup s{SystemSpec{make_least_squares(A, b), StrigsParams{eps, 2.0},
                              exp_diffusion(1.0, 0.5, 2)}};
  s.init.t = 1.0;
  s.init.x = Vec::Ones(2);
  s.init.y = Vec::Zero(2);
  s.T = 2e3;
  s.h = 0.01;
  s.n_paths = 4;
  s.master_seed = 5;
  s.checkpoints = {2e3};
  s.workers = 1;
  const auto res = run_ensemble(s);
  const Vec x_star = (Vec(2) << 1, 0).finished();
  const auto chk = min_norm_convergence_check(res, x_star, 0.05);
  EXPECT_TRUE(chk.ok) << chk.dist_mean;
  EXPECT_LE(chk.dist_mean, chk.max_path_dist + 1e-15);
}

TEST(MinNorm, ThresholdLogic) {
  EnsembleResult res;
  res.n_paths = 2;
  res.paths.resize(2);
  res.paths[0].x_final = (Vec(1) << 0.1).finished();
  res.paths[1].x_final = (Vec(1) << -0.1).finished();
  const Vec x_star = Vec::Zero(1);
  const auto a = min_norm_convergence_check(res, x_star, 0.05);
  EXPECT_NEAR(a.dist_mean, 0.0, 1e-15);
  EXPECT_NEAR(a.max_path_dist, 0.1, 1e-15);
  EXPECT_TRUE(a.ok);
  EXPECT_FALSE(min_norm_convergence_check(res, x_star, 0.03).ok);
}

TEST(Compare, AllKindsRun) {
  CompareSetup s{.problem = make_shifted_quadratic(Vec::Constant(2, 0.5)),
                 .sigma = DiffusionSchedule::zero(2),
                 .eps = EpsilonSchedule::power(1.0, 1.0)};
  s.x0 = Vec::Ones(2);
  s.T = 1e3;
  s.checkpoints = log_checkpoints(1.0, 1e3, 16);
  s.fit_lo = 1e1;
  s.fit_hi = 1e3;
  const auto table = compare_baselines(s);
  ASSERT_EQ(table.kinds.size(), 5u);
  EXPECT_EQ(table.kinds[0], "strigs");
  for (const auto& d : table.diagnostics) EXPECT_TRUE(d.empty()) << d;
  for (const auto& row : table.f_gap) {
    ASSERT_EQ(row.size(), table.checkpoints.size());
    EXPECT_TRUE(std::isfinite(row.back()));
  }
  EXPECT_LT(table.slopes[0], 0.0);
}

}  // namespace
}  // namespace strigs
