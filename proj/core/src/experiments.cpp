#include "strigs/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <span>
#include <thread>

#include "strigs/error.hpp"
#include "strigs/quadrature.hpp"
#include "strigs/rng.hpp"

namespace strigs {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void parallel_for(int n, int workers, const std::function<void(int)>& body) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

// Sum in index order, with antithetic partners combined first so that values
// odd in the noise cancel exactly.
double ordered_sum(const std::vector<double>& v, bool paired) {
  if (!paired) return pairwise_sum(v);
  std::vector<double> pairs;
  pairs.reserve(v.size() / 2 + 1);
  for (std::size_t i = 0; i + 1 < v.size(); i += 2) pairs.push_back(v[i] + v[i + 1]);
  if (v.size() % 2 == 1) pairs.push_back(v.back());
  return pairwise_sum(pairs);
}

void mean_and_se(const std::vector<double>& v, bool paired, double& mean, double& se) {
  const auto n = static_cast<double>(v.size());
  mean = ordered_sum(v, paired) / n;
  if (v.size() < 2) {
    se = 0.0;
    return;
  }
  std::vector<double> dev(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) dev[i] = (v[i] - mean) * (v[i] - mean);
  se = std::sqrt(pairwise_sum(dev) / (n - 1.0)) / std::sqrt(n);
}

// x_eps on a time table, linearly interpolated in between. Used only as an
// adapted integrand for the stochastic-integral proxy.
class PathTable {
 public:
  PathTable(const ConvexProblem& problem, const EpsilonSchedule& eps, std::vector<double> times) {
    std::optional<Vec> warm;
    for (double t : times) {
      PathPoint p = solve_path_point(problem, eps, t, warm);
      warm = p.x_eps;
      t_.push_back(t);
      x_.push_back(std::move(p.x_eps));
    }
  }

  // `hint` carries the segment between calls with increasing t.
  void at(double t, Vec& out, std::size_t& hint) const {
    if (t <= t_.front()) {
      out = x_.front();
      return;
    }
    if (t >= t_.back()) {
      out = x_.back();
      return;
    }
    hint = std::max<std::size_t>(hint, 1);
    if (t_[hint - 1] > t) hint = 1;
    while (t_[hint] < t) ++hint;
    const double w = (t - t_[hint - 1]) / (t_[hint] - t_[hint - 1]);
    out = (1.0 - w) * x_[hint - 1] + w * x_[hint];
  }

 private:
  std::vector<double> t_;
  std::vector<Vec> x_;
};

}  // namespace

const char* to_string(Metric metric) {
  switch (metric) {
    case Metric::kFGap: return "f_gap";
    case Metric::kDistSq: return "dist_sq";
    case Metric::kYNorm: return "y_norm";
    case Metric::kEnergy: return "energy";
  }
  return "?";
}

Metric parse_metric(const std::string& name) {
  for (Metric m : kAllMetrics) {
    if (name == to_string(m)) return m;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown metric '" + name + "'");
}

int default_workers() {
  if (const char* env = std::getenv("STRIGS_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

EnsembleResult run_ensemble(const EnsembleSetup& setup) {
  if (setup.n_paths < 1) throw Error(ErrorCode::kInvalidArgument, "n_paths must be >= 1");
  if (setup.antithetic && setup.n_paths % 2 != 0) {
    throw Error(ErrorCode::kInvalidArgument, "antithetic pairing needs an even n_paths");
  }
  const SystemSpec& sys = setup.system;
  const ConvexProblem& problem = sys.problem;
  const EpsilonSchedule* eps = sys.eps();
  const bool has_energy = setup.damping.has_value() && eps != nullptr;
  if (setup.martingale && !(has_energy && sys.kind() == SystemKind::kStrigs)) {
    throw Error(ErrorCode::kInvalidArgument,
                "martingale proxies need the strigs system with damping parameters");
  }
  const std::optional<Vec>& x_star = problem.min_norm_minimizer();
  const int n = setup.n_paths;

  // Checkpoint times as realized on the grid, shared by every path.
  std::vector<double> times;
  {
    const std::int64_t last = grid_index(setup.init.t, setup.h, setup.T);
    std::vector<std::int64_t> idx{0, last};
    for (double c : setup.checkpoints) {
      if (c < setup.init.t || c > setup.T) continue;
      idx.push_back(std::clamp<std::int64_t>(grid_index(setup.init.t, setup.h, c), 0, last));
    }
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    for (std::int64_t k : idx) times.push_back(setup.init.t + static_cast<double>(k) * setup.h);
  }
  const std::size_t n_ck = times.size();

  // x_eps at each checkpoint, shared.
  std::vector<Vec> x_eps;
  if (eps != nullptr) {
    std::optional<Vec> warm;
    for (double t : times) {
      PathPoint p = solve_path_point(problem, *eps, t, warm);
      warm = p.x_eps;
      x_eps.push_back(std::move(p.x_eps));
    }
  }

  // Stochastic-integral proxy ingredients, tabulated per step from t1 on:
  // sigma_w column k holds gamma(t_k)/gamma(T) diag(sigma(t_k)), scale_k is
  // lambda sqrt(eps(t_k)), linear column k the noise-free path's coefficient.
  const double t1 = has_energy ? setup.damping->t1 : 0.0;
  double log_norm = 0.0;
  std::optional<PathTable> table;
  Mat sigma_w;
  Vec scale;
  Mat linear;
  std::int64_t first_proxy_step = 0;
  if (setup.martingale) {
    const DampingParams& d = *setup.damping;
    const std::int64_t last = grid_index(setup.init.t, setup.h, setup.T);
    const double t_end = setup.init.t + static_cast<double>(last) * setup.h;
    log_norm = log_gamma(d, *eps, t1, t_end);
    table.emplace(problem, *eps, log_checkpoints(std::max(t1, setup.init.t), t_end, 256));
    first_proxy_step = std::clamp<std::int64_t>(
        static_cast<std::int64_t>(std::ceil((t1 - setup.init.t) / setup.h - 1e-9)), 0, last);
    const auto n_steps = static_cast<Eigen::Index>(last - first_proxy_step);
    const Vec ones = Vec::Ones(problem.dim());
    sigma_w.resize(problem.dim(), n_steps);
    scale.resize(n_steps);
    linear.resize(problem.dim(), n_steps);
    for (Eigen::Index k = 0; k < n_steps; ++k) {
      const double t = setup.init.t + static_cast<double>(first_proxy_step + k) * setup.h;
      const double w = std::exp(log_gamma(d, *eps, t1, t) - log_norm);
      sigma_w.col(k) = w * sys.sigma.apply(t, ones);
      scale[k] = d.lambda * std::sqrt(eps->eval(t));
    }

    SystemSpec quiet = sys;
    quiet.sigma = DiffusionSchedule::zero(problem.dim());
    Vec xe(problem.dim());
    std::size_t hint = 0;
    IntegrateOptions opts;
    opts.scheme = setup.scheme;
    opts.observer = [&](std::int64_t step, const SimState& s, const Vec&) {
      const Eigen::Index k = step - first_proxy_step;
      if (k < 0 || k >= n_steps) return;
      table->at(s.t, xe, hint);
      linear.col(k) = sigma_w.col(k).cwiseProduct(scale[k] * (s.x - xe) + s.y);
    };
    const Trajectory companion = integrate(quiet, setup.init, setup.T, setup.h, 0, {}, opts);
    if (!companion.ok) {
      throw Error(ErrorCode::kNonfiniteState, "noise-free companion path: " + companion.diagnostic);
    }
  }

  EnsembleResult res;
  res.n_paths = n;
  res.master_seed = setup.master_seed;
  res.checkpoints = times;
  res.martingale_log_normalization = log_norm;
  res.paths.resize(n);
  if (setup.keep_trajectories) res.trajectories.resize(n);
  for (auto& m : res.metrics) m.per_path.assign(n, std::vector<double>(n_ck, kNaN));

  auto run_path = [&](int i) {
    PathSummary& ps = res.paths[i];
    ps.antithetic = setup.antithetic && (i % 2 == 1);
    ps.seed = derive_seed(setup.master_seed,
                          static_cast<std::uint64_t>(setup.antithetic ? i / 2 : i));

    IntegrateOptions opts;
    opts.scheme = setup.scheme;
    opts.antithetic = ps.antithetic;
    double mart = 0.0;
    double mart_lin = 0.0;
    Vec xe(problem.dim());
    Vec v(problem.dim());
    std::size_t hint = 0;
    if (setup.martingale) {
      opts.observer = [&](std::int64_t step, const SimState& s, const Vec& dw) {
        const Eigen::Index k = step - first_proxy_step;
        if (k < 0 || k >= scale.size()) return;
        table->at(s.t, xe, hint);
        v = scale[k] * (s.x - xe) + s.y;
        mart += v.cwiseProduct(sigma_w.col(k)).dot(dw);
        mart_lin += linear.col(k).dot(dw);
      };
    }
    Trajectory traj = integrate(sys, setup.init, setup.T, setup.h, ps.seed, times, opts);
    ps.ok = traj.ok;
    ps.diagnostic = traj.diagnostic;
    ps.martingale = mart;
    ps.martingale_linear = mart_lin;
    if (!traj.states.empty()) ps.x_final = traj.states.back().x;

    for (std::size_t j = 0; j < traj.states.size() && j < n_ck; ++j) {
      const SimState& s = traj.states[j];
      res.metrics[0].per_path[i][j] = problem.eval(s.x) - problem.inf_value();
      if (eps != nullptr) {
        res.metrics[1].per_path[i][j] = (s.x - x_eps[j]).squaredNorm();
      } else if (x_star) {
        res.metrics[1].per_path[i][j] = (s.x - *x_star).squaredNorm();
      }
      if (!sys.first_order()) res.metrics[2].per_path[i][j] = s.y.norm();
      if (has_energy) {
        PathPoint pp;
        pp.t = s.t;
        pp.eps = eps->eval(s.t);
        pp.x_eps = x_eps[j];
        const EnergyReport rep = energy_eval(problem, *setup.damping, *eps, s.t, s.x, s.y, pp);
        res.metrics[3].per_path[i][j] = rep.energy;
        if (x_star) {
          const LemmaCheck lc = lemma_estimates(problem, pp.eps, rep, s.x, x_eps[j]);
          if (!lc.f_gap_ok || !lc.dist_ok) ++ps.lemma_violations;
        }
      }
    }
    if (setup.keep_trajectories) res.trajectories[i] = std::move(traj);
  };

  const int workers = setup.workers > 0 ? setup.workers : default_workers();
  parallel_for(n, workers, run_path);

  std::string failed;
  for (int i = 0; i < n; ++i) {
    if (!res.paths[i].ok) {
      failed += (failed.empty() ? "" : "; ") + std::string("path ") + std::to_string(i) + ": " +
                res.paths[i].diagnostic;
    }
  }
  if (!failed.empty()) throw Error(ErrorCode::kNonfiniteState, failed);

  for (auto& m : res.metrics) {
    m.mean.assign(n_ck, kNaN);
    m.se.assign(n_ck, kNaN);
    std::vector<double> column(n);
    for (std::size_t j = 0; j < n_ck; ++j) {
      for (int i = 0; i < n; ++i) column[i] = m.per_path[i][j];
      mean_and_se(column, setup.antithetic, m.mean[j], m.se[j]);
    }
  }
  return res;
}

double expected_slope(Metric metric, double r) {
  switch (metric) {
    case Metric::kFGap: return -r;
    case Metric::kDistSq: return -(2.0 - r) / 2.0;
    case Metric::kYNorm: return r >= 2.0 / 3.0 ? -(r + 2.0) / 4.0 : -r;
    case Metric::kEnergy: return -(r + 2.0) / 2.0;
  }
  return 0.0;
}

RateFit fit_rate(const std::vector<double>& t, const std::vector<double>& values,
                 const std::string& metric, double t_lo, double t_hi, double expected,
                 double slack) {
  if (t.size() != values.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "fit_rate: times and values differ in length");
  }
  RateFit fit;
  fit.metric = metric;
  fit.t_lo = t_lo;
  fit.t_hi = t_hi;
  fit.expected_slope = expected;
  fit.slack = slack;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_lo * (1.0 - 1e-12) || t[i] > t_hi * (1.0 + 1e-12)) continue;
    double v = values[i];
    if (std::isnan(v)) {
      throw Error(ErrorCode::kNonfiniteState, "fit_rate: NaN sample for " + metric);
    }
    if (v < kMetricFloor) {
      v = kMetricFloor;
      ++fit.floored;
    }
    lx.push_back(std::log(t[i]));
    ly.push_back(std::log(v));
  }
  fit.n_points = static_cast<int>(lx.size());
  if (fit.n_points < 8) {
    throw Error(ErrorCode::kWindowTooSmall, "fit window [" + std::to_string(t_lo) + ", " +
                                                std::to_string(t_hi) + "] holds " +
                                                std::to_string(fit.n_points) +
                                                " samples, need at least 8");
  }
  const double nx = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= nx;
  my /= nx;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.pass = fit.slope <= expected + slack;
  return fit;
}

RateFit fit_rate(const EnsembleResult& result, Metric metric, double t_lo, double t_hi,
                 double expected, double slack) {
  return fit_rate(result.checkpoints, result.metric(metric).mean, to_string(metric), t_lo, t_hi,
                  expected, slack);
}

std::vector<BoundCheckRow> check_expectation_bound(const EnsembleResult& result,
                                                   const BoundCurve& curve, bool strong) {
  const MetricSeries& energy = result.metric(Metric::kEnergy);
  std::vector<BoundCheckRow> rows;
  for (std::size_t k = 0; k < curve.t.size(); ++k) {
    const double t = curve.t[k];
    const auto it = std::find_if(result.checkpoints.begin(), result.checkpoints.end(),
                                 [t](double c) { return std::abs(c - t) <= 1e-9 * t; });
    if (it == result.checkpoints.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "bound curve time " + std::to_string(t) + " is not an ensemble checkpoint");
    }
    const auto j = static_cast<std::size_t>(it - result.checkpoints.begin());
    BoundCheckRow row;
    row.t = t;
    row.mean = energy.mean[j];
    row.se = energy.se[j];
    row.bound = strong ? curve.strong[k] : curve.weak[k];
    row.ok = row.mean <= row.bound + 3.0 * row.se;
    rows.push_back(row);
  }
  return rows;
}

MeanCheck martingale_mean_check(const std::vector<double>& values) {
  MeanCheck mc;
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "no martingale samples");
  mean_and_se(values, false, mc.mean, mc.se);
  mc.ok = std::abs(mc.mean) <= 3.0 * mc.se;
  return mc;
}

MeanCheck martingale_mean_check(const EnsembleResult& result) {
  std::vector<double> values;
  bool paired = !result.paths.empty();
  for (std::size_t i = 0; i < result.paths.size(); ++i) {
    values.push_back(result.paths[i].martingale);
    if (result.paths[i].antithetic != (i % 2 == 1)) paired = false;
  }
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "no martingale samples");
  MeanCheck mc;
  mean_and_se(values, paired, mc.mean, mc.se);
  mc.ok = std::abs(mc.mean) <= 3.0 * mc.se;
  return mc;
}

MinNormCheck min_norm_convergence_check(const EnsembleResult& result, const Vec& x_star,
                                        double threshold) {
  MinNormCheck out;
  if (result.paths.empty()) throw Error(ErrorCode::kInvalidArgument, "empty ensemble");
  Vec mean = Vec::Zero(x_star.size());
  for (const PathSummary& p : result.paths) {
    if (p.x_final.size() != x_star.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "final state and x* differ in dimension");
    }
    mean += p.x_final;
    out.max_path_dist = std::max(out.max_path_dist, (p.x_final - x_star).norm());
  }
  mean /= static_cast<double>(result.paths.size());
  out.dist_mean = (mean - x_star).norm();
  out.ok = out.dist_mean <= threshold && out.max_path_dist <= 3.0 * threshold;
  return out;
}

CompareTable compare_baselines(const CompareSetup& setup) {
  const int dim = setup.problem.dim();
  if (setup.x0.size() != dim) {
    throw Error(ErrorCode::kDimensionMismatch, "x0 does not match the problem dimension");
  }
  const std::vector<std::pair<SystemKind, DynamicsParams>> systems = {
      {SystemKind::kStrigs, StrigsParams{setup.eps, setup.delta}},
      {SystemKind::kSavd, SavdParams{setup.savd_alpha}},
      {SystemKind::kSgf, SgfParams{}},
      {SystemKind::kHeavyBall, HeavyBallParams{setup.heavy_ball_mu}},
      {SystemKind::kStrigsGen, setup.gen},
  };
  CompareTable table;
  for (const auto& [kind, params] : systems) {
    SystemSpec spec{setup.problem, params, setup.sigma};
    SimState init;
    init.t = setup.t0;
    init.x = setup.x0;
    if (kind != SystemKind::kSgf) init.y = Vec::Zero(dim);
    IntegrateOptions opts;
    opts.scheme = setup.scheme;
    const Trajectory traj =
        integrate(spec, init, setup.T, setup.h, setup.seed, setup.checkpoints, opts);
    if (table.checkpoints.empty()) {
      for (const SimState& s : traj.states) table.checkpoints.push_back(s.t);
    }
    std::vector<double> gap(table.checkpoints.size(), kNaN);
    for (std::size_t j = 0; j < traj.states.size() && j < gap.size(); ++j) {
      gap[j] = setup.problem.eval(traj.states[j].x) - setup.problem.inf_value();
    }
    std::string diag = traj.ok ? "" : traj.diagnostic;
    double slope = kNaN;
    if (traj.ok) {
      try {
        slope = fit_rate(table.checkpoints, gap, "f_gap", setup.fit_lo, setup.fit_hi, 0.0, 0.0)
                    .slope;
      } catch (const Error& e) {
        diag = e.what();
      }
    }
    table.kinds.emplace_back(to_string(kind));
    table.f_gap.push_back(std::move(gap));
    table.slopes.push_back(slope);
    table.diagnostics.push_back(std::move(diag));
  }
  return table;
}

}  // namespace strigs
