#pragma once

// Monte Carlo ensembles over the inertial system, metric extraction at
// checkpoints, log-log rate fits and the expectation-bound, martingale and
// minimum-norm checks built on top of them.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "strigs/dynamics.hpp"
#include "strigs/lyapunov.hpp"

namespace strigs {

enum class Metric { kFGap = 0, kDistSq, kYNorm, kEnergy };
inline constexpr std::array<Metric, 4> kAllMetrics = {Metric::kFGap, Metric::kDistSq,
                                                      Metric::kYNorm, Metric::kEnergy};

const char* to_string(Metric metric);
Metric parse_metric(const std::string& name);

struct MetricSeries {
  std::vector<std::vector<double>> per_path;  // [path][checkpoint]
  std::vector<double> mean;
  std::vector<double> se;  // sample std / sqrt(n); 0 for a single path
};

struct PathSummary {
  std::uint64_t seed = 0;
  bool antithetic = false;
  Vec x_final;
  int lemma_violations = 0;
  // sum over steps in [t1, T] of gamma(s)/gamma(T) <V, sigma dW>, with x_eps
  // interpolated from a fixed table
  double martingale = 0.0;
  double martingale_linear = 0.0;  // same with V from the noise-free companion path
  bool ok = true;
  std::string diagnostic;
};

struct EnsembleSetup {
  SystemSpec system;
  // Energy functional parameters; energy-based metrics are NaN without them or
  // when the system has no Tikhonov schedule.
  std::optional<DampingParams> damping{};
  SimState init{};
  double T = 1e4;
  double h = 0.01;
  int n_paths = 1;
  std::uint64_t master_seed = 0;
  std::vector<double> checkpoints{};
  Scheme scheme = Scheme::kSemiImplicit;
  bool antithetic = false;   // paths 2k, 2k+1 share a seed with W and -W
  bool martingale = false;   // accumulate the stochastic-integral proxies
  int workers = 0;           // 0: STRIGS_WORKERS or hardware concurrency
  bool keep_trajectories = false;
};

struct EnsembleResult {
  int n_paths = 0;
  std::uint64_t master_seed = 0;
  std::vector<double> checkpoints;  // grid times actually sampled
  std::array<MetricSeries, 4> metrics;
  std::vector<PathSummary> paths;
  std::vector<Trajectory> trajectories;  // only with keep_trajectories
  // log gamma(T)/gamma(t1); adding it rescales the proxies to gamma(t1) units
  double martingale_log_normalization = 0.0;

  const MetricSeries& metric(Metric m) const { return metrics[static_cast<int>(m)]; }
};

/// Path i uses seed derive_seed(master_seed, i) (derive_seed(master, i/2) with
/// antithetic pairing). Throws Error(kNonfiniteState) naming the failed paths
/// if any path aborts.
EnsembleResult run_ensemble(const EnsembleSetup& setup);

/// Worker count from STRIGS_WORKERS, else hardware concurrency (at least 1).
int default_workers();

struct RateFit {
  std::string metric;
  double t_lo = 0.0;
  double t_hi = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double expected_slope = 0.0;
  double slack = 0.0;
  bool pass = false;
  int n_points = 0;
  int floored = 0;  // samples raised to the 1e-30 floor before taking logs
};

inline constexpr double kMetricFloor = 1e-30;

/// OLS of log(value) on log(t) over samples with t in [t_lo, t_hi].
/// pass <=> slope <= expected_slope + slack. Throws Error(kWindowTooSmall)
/// with fewer than 8 samples in the window.
RateFit fit_rate(const std::vector<double>& t, const std::vector<double>& values,
                 const std::string& metric, double t_lo, double t_hi, double expected_slope,
                 double slack);

/// Fit on the ensemble mean of a metric.
RateFit fit_rate(const EnsembleResult& result, Metric metric, double t_lo, double t_hi,
                 double expected_slope, double slack);

/// -r for f_gap, -(2-r)/2 for dist_sq, -(r+2)/4 (r >= 2/3) or -r (r < 2/3)
/// for y_norm, -(r+2)/2 for energy.
double expected_slope(Metric metric, double r);

struct BoundCheckRow {
  double t = 0.0;
  double mean = 0.0;
  double se = 0.0;
  double bound = 0.0;
  bool ok = false;
};

/// mean energy <= bound + 3 se at each checkpoint of the curve; the curve
/// times must be a subset of the result checkpoints.
std::vector<BoundCheckRow> check_expectation_bound(const EnsembleResult& result,
                                                   const BoundCurve& curve, bool strong);

struct MeanCheck {
  double mean = 0.0;
  double se = 0.0;
  bool ok = false;
};

/// |mean| <= 3 se over the given per-path values.
MeanCheck martingale_mean_check(const std::vector<double>& values);
MeanCheck martingale_mean_check(const EnsembleResult& result);

struct MinNormCheck {
  double dist_mean = 0.0;      // |mean X(T) - x*|
  double max_path_dist = 0.0;  // max_i |X_i(T) - x*|
  bool ok = false;
};

/// ok <=> dist_mean <= threshold and every path within 3 threshold.
MinNormCheck min_norm_convergence_check(const EnsembleResult& result, const Vec& x_star,
                                        double threshold);

struct CompareSetup {
  ConvexProblem problem;
  DiffusionSchedule sigma;
  EpsilonSchedule eps;
  double delta = 2.0;
  double savd_alpha = 3.0;
  double heavy_ball_mu = 1.0;
  StrigsGenParams gen{2.0, 0.5, 1.0, 1.0};
  Vec x0{};
  double t0 = 1.0;
  double T = 1e4;
  double h = 0.01;
  std::uint64_t seed = 0;
  std::vector<double> checkpoints{};
  double fit_lo = 1e2;
  double fit_hi = 1e4;
  Scheme scheme = Scheme::kSemiImplicit;
};

struct CompareTable {
  std::vector<std::string> kinds;
  std::vector<double> checkpoints;
  std::vector<std::vector<double>> f_gap;  // [kind][checkpoint]
  std::vector<double> slopes;              // fitted f_gap slope per kind
  std::vector<std::string> diagnostics;    // empty on success
};

/// strigs, savd, sgf, heavy_ball and strigs_gen on the same problem and noise
/// seed. Observational only.
CompareTable compare_baselines(const CompareSetup& setup);

}  // namespace strigs
