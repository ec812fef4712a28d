// Acceptance suite: one PASS/FAIL line per criterion A1..A11.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "strigs/cli/commands.hpp"
#include "strigs/cli/config.hpp"
#include "strigs/strigs.hpp"

namespace {

using namespace strigs;
using cli::RunConfig;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

EnsembleSetup setup_from(const RunConfig& cfg) {
  EnsembleSetup s{cfg.system()};
  s.damping = cfg.energy_damping();
  s.init = cfg.initial_state();
  s.T = cfg.sim.T;
  s.h = cfg.sim.h;
  s.n_paths = cfg.experiment.n_paths;
  s.master_seed = cfg.sim.seed;
  s.checkpoints = cfg.checkpoints();
  s.scheme = cfg.sim.scheme;
  return s;
}

std::size_t first_at_or_after(const std::vector<double>& t, double t1) {
  std::size_t j = 0;
  while (j < t.size() && t[j] < t1 * (1.0 - 1e-9)) ++j;
  return j;
}

std::vector<double> grid_from(const EnsembleResult& res, double t1) {
  const std::size_t j = first_at_or_after(res.checkpoints, t1);
  return {res.checkpoints.begin() + static_cast<std::ptrdiff_t>(j), res.checkpoints.end()};
}

int lemma_violations(const EnsembleResult& res) {
  int n = 0;
  for (const auto& p : res.paths) n += p.lemma_violations;
  return n;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A1
Outcome oracle_equivalence() {
  Mat A(2, 2);
  A << 1, 0, 0, 0;
  Mat B(3, 3);
  B << 2, 1, 1, 1, 1, 0, 3, 2, 1;  // rank 2, spread spectrum
  const ConvexProblem problems[] = {
      make_shifted_quadratic((Vec(4) << 0.5, -1.0, 2.0, 0.25).finished()),
      make_least_squares(A, (Vec(2) << 1, 1).finished()),
      make_least_squares(B, (Vec(3) << 1, -1, 2).finished())};
  PathSolverOptions numeric;
  numeric.use_closed_form = false;
  numeric.tol = 1e-11;
  double worst = 0.0;
  int max_iters = 0;
  bool converged = true;
  for (const auto& p : problems) {
    for (int k = 0; k < 50; ++k) {
      const double eps = std::pow(10.0, -6.0 + 6.0 * k / 49.0);
      const PathPoint pp = solve_x_eps(p, eps, std::nullopt, numeric);
      converged = converged && pp.converged && !pp.closed_form;
      max_iters = std::max(max_iters, pp.solver_iters);
      worst = std::max(worst, (pp.x_eps - p.regularized_argmin(eps)).cwiseAbs().maxCoeff());
    }
  }
  return {worst <= 1e-8 && converged, "max error " + fmt("%.3g", worst) + ", max solver iterations " +
                                          std::to_string(max_iters)};
}

struct RateRuns {
  std::map<double, EnsembleResult> by_r;
};

RateRuns rate_runs() {
  RateRuns out;
  for (double r : {0.5, 1.0, 1.5}) {
    const auto cfg = cli::parse_config("", {"sigma.kind=zero", "experiment.n_paths=1",
                                            "eps.r=" + fmt("%g", r), "sim.T=1e4", "sim.h=0.01"});
    out.by_r.emplace(r, run_ensemble(setup_from(cfg)));
  }
  return out;
}

Outcome rate_check(const RateRuns& runs, Metric m, const std::vector<double>& rs, double slack) {
  Outcome o{true, ""};
  for (double r : rs) {
    const auto fit = fit_rate(runs.by_r.at(r), m, 1e2, 1e4, expected_slope(m, r), slack);
    o.pass = o.pass && fit.pass;
    o.detail += "r=" + fmt("%g", r) + " slope " + fmt("%.3f", fit.slope) + " (<= " +
                fmt("%.3f", fit.expected_slope + slack) + ") ";
  }
  o.detail.pop_back();
  return o;
}

// A5 and the ensemble reused by A9
struct BoundRuns {
  Outcome outcome;
  EnsembleResult noisy;
  int violations = 0;
};

BoundRuns expectation_bound_check() {
  BoundRuns out;
  const auto cfg = cli::parse_config("", {"experiment.n_paths=64", "sim.T=1e4"});
  auto setup = setup_from(cfg);
  setup.martingale = true;
  out.noisy = run_ensemble(setup);
  const double t1 = cfg.damping.t1;
  const auto grid = grid_from(out.noisy, t1);
  const double e1 = out.noisy.metric(Metric::kEnergy).mean[first_at_or_after(out.noisy.checkpoints, t1)];
  const auto curve = expectation_bound_curve(cfg.energy_model(), grid, e1);
  const auto rows = check_expectation_bound(out.noisy, curve, true);
  const int bad_noisy = static_cast<int>(std::count_if(rows.begin(), rows.end(),
                                                       [](const auto& r) { return !r.ok; }));

  const auto det_cfg =
      cli::parse_config("", {"sigma.kind=zero", "experiment.n_paths=1", "sim.T=1e4"});
  auto det_setup = setup_from(det_cfg);
  det_setup.keep_trajectories = true;
  const auto det = run_ensemble(det_setup);
  const auto det_grid = grid_from(det, t1);
  const double det_e1 = det.metric(Metric::kEnergy).mean[first_at_or_after(det.checkpoints, t1)];
  const auto det_curve = expectation_bound_curve(det_cfg.energy_model(), det_grid, det_e1);
  const auto det_rows = check_expectation_bound(det, det_curve, true);
  const int bad_det = static_cast<int>(std::count_if(det_rows.begin(), det_rows.end(),
                                                     [](const auto& r) { return !r.ok; }));
  const auto energies =
      trajectory_energies(det_cfg.energy_model(), det.trajectories.front(), t1);
  const auto gron = gronwall_check(det_cfg.energy_model(), energies);
  const int bad_gron = static_cast<int>(std::count_if(gron.begin(), gron.end(),
                                                      [](const auto& r) { return !r.ok; }));
  out.violations = lemma_violations(out.noisy) + lemma_violations(det);
  out.outcome.pass = !rows.empty() && bad_noisy == 0 && bad_det == 0 && bad_gron == 0 &&
                     curve.quadrature_resolved && det_curve.quadrature_resolved;
  out.outcome.detail = "ensemble " + std::to_string(rows.size() - bad_noisy) + "/" +
                       std::to_string(rows.size()) + ", deterministic " +
                       std::to_string(det_rows.size() - bad_det) + "/" +
                       std::to_string(det_rows.size()) + ", gronwall " +
                       std::to_string(gron.size() - bad_gron) + "/" + std::to_string(gron.size());
  return out;
}

// A6
Outcome min_norm_selection(int& violations) {
  const auto cfg = cli::parse_config(
      "problem.kind = least_squares\nproblem.A = [[1, 0], [0, 0]]\nproblem.b = [1, 1]\n"
      "sim.x0 = [1, 1]\nexperiment.n_paths = 16\nsim.T = 1e4\n");
  const auto res = run_ensemble(setup_from(cfg));
  violations += lemma_violations(res);
  const auto chk = min_norm_convergence_check(res, (Vec(2) << 1, 0).finished(), 0.05);
  return {chk.ok && chk.max_path_dist <= 0.15,
          "|mean X(T) - x*| " + fmt("%.3g", chk.dist_mean) + ", max path " +
              fmt("%.3g", chk.max_path_dist)};
}

// A7
Outcome drift_regularity() {
  Mat A(2, 2);
  A << 1, 0, 0, 0;
  HuberParams hp;
  hp.dim = 3;
  hp.threshold = 0.5;
  const ConvexProblem problems[] = {make_shifted_quadratic(Vec::Constant(4, 0.5)),
                                    make_least_squares(A, (Vec(2) << 1, 1).finished()),
                                    make_smoothed_norm(hp)};
  const auto eps = EpsilonSchedule::power(1.0, 1.0);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> logt(0.0, 4.0);
  int bad = 0, total = 0;
  for (const auto& p : problems) {
    const SystemSpec spec{p, StrigsParams{eps, 2.0}, DiffusionSchedule::zero(p.dim())};
    for (int k = 0; k < 10000; ++k) {
      Vec x1(p.dim()), y1(p.dim()), x2(p.dim()), y2(p.dim());
      for (Vec* v : {&x1, &y1, &x2, &y2})
        for (auto& c : *v) c = 3.0 * n01(rng);
      const double t = std::pow(10.0, logt(rng));
      if (!drift_lipschitz_witness(spec, t, x1, y1, x2, y2).ok) ++bad;
      ++total;
    }
  }
  return {bad == 0, std::to_string(bad) + " violations in " + std::to_string(total) + " pairs"};
}

// A9
Outcome martingale_mean(const EnsembleResult& preset_run, int& violations) {
  auto mc = martingale_mean_check(preset_run);
  std::string rerun;
  if (!mc.ok) {
    auto cfg = cli::parse_config("", {"experiment.n_paths=64", "sim.T=1e4", "sim.seed=1"});
    auto s = setup_from(cfg);
    s.martingale = true;
    mc = martingale_mean_check(run_ensemble(s));
    rerun = " (after one rerun with a fresh seed)";
  }
  auto cfg = cli::parse_config("", {"experiment.n_paths=64", "sim.T=1e3"});
  auto s = setup_from(cfg);
  s.antithetic = true;
  s.martingale = true;
  const auto pairs = run_ensemble(s);
  violations += lemma_violations(pairs);
  int nonzero = 0;
  std::vector<double> pair_sums;
  for (std::size_t i = 0; i + 1 < pairs.paths.size(); i += 2) {
    pair_sums.push_back(pairs.paths[i].martingale_linear + pairs.paths[i + 1].martingale_linear);
    if (pair_sums.back() != 0.0) ++nonzero;
  }
  const double pair_mean = pairwise_sum(pair_sums) / static_cast<double>(pairs.paths.size());
  const auto full = martingale_mean_check(pairs);
  return {mc.ok && nonzero == 0 && pair_mean == 0.0,
          "|mean|/se " + fmt("%.2f", std::abs(mc.mean) / mc.se) + rerun +
              "; antithetic linear mean " + fmt("%g", pair_mean) + ", full proxy |mean|/se " +
              fmt("%.2f", std::abs(full.mean) / full.se)};
}

// A10
Outcome reproducibility() {
  const auto dir = fs::temp_directory_path() / "strigs_acceptance_repro";
  fs::remove_all(dir);
  const std::string text =
      "experiment.n_paths = 8\nsim.T = 1e3\nsim.seed = 42\noutput_dir = \"" + dir.string() + "\"\n";
  std::ostringstream out, err;
  const std::vector<std::string> files{"trajectories.csv", "metrics.csv", "paths.csv",
                                       "bound.csv", "ratefit.csv"};
  for (const char* id : {"a", "b"}) {
    const auto cfg = cli::parse_config(text, {std::string("run_id=") + id});
    if (cli::run_command("ensemble", cfg, {}, out, err) != cli::kExitOk) {
      return {false, "ensemble run failed: " + err.str()};
    }
  }
  int differing = 0;
  for (const auto& f : files) {
    const auto a = slurp(dir / "a" / f);
    if (a.empty() || a != slurp(dir / "b" / f)) ++differing;
  }

  auto s = setup_from(cli::parse_config(text));
  s.martingale = true;
  s.workers = 1;
  const auto one = run_ensemble(s);
  s.workers = 4;
  const auto four = run_ensemble(s);
  bool same = true;
  for (int m = 0; m < 4; ++m) {
    same = same && one.metrics[m].per_path == four.metrics[m].per_path &&
           one.metrics[m].mean == four.metrics[m].mean && one.metrics[m].se == four.metrics[m].se;
  }
  for (std::size_t i = 0; i < one.paths.size(); ++i) {
    same = same && one.paths[i].x_final == four.paths[i].x_final &&
           one.paths[i].martingale == four.paths[i].martingale;
  }
  fs::remove_all(dir);
  return {differing == 0 && same, std::to_string(files.size() - differing) + "/" +
                                      std::to_string(files.size()) +
                                      " files identical, workers 1 vs 4 " +
                                      (same ? "identical" : "differ")};
}

// A11
Outcome discretization() {
  const double T_sweep = 100.0;
  const Vec q = Vec::Constant(4, 0.5);
  const auto eps = EpsilonSchedule::power(1.0, 1.0);
  const SystemSpec spec{make_shifted_quadratic(q), StrigsParams{eps, 2.0},
                        DiffusionSchedule::zero(4)};
  SimState init;
  init.t = 1.0;
  init.x = Vec::Ones(4);
  init.y = Vec::Zero(4);
  const auto checkpoints = log_checkpoints(1.0, T_sweep, 16);
  const auto sweep = step_size_sweep(spec, init, T_sweep, {0.04, 0.02, 0.01, 0.005}, checkpoints);

  // All four coordinates share k = 1, q = 0.5 and the initial state, so one
  // reference coordinate covers them.
  const double h = 0.01;
  const double T_run = 1e4;
  const oracle::DiagonalCase dc{{1.0}, {0.5}, 1.0, 2.0};
  double dev_at_T = 0.0, dev_transient = 0.0;
  for (double horizon : {2.0, 5.0, 10.0, 30.0, 100.0, T_run}) {
    const Vec xe = integrate(spec, init, horizon, h, 0, {}).states.back().x;
    const double ref = oracle::rk4_diagonal(dc, {1.0}, {0.0}, 1.0, horizon, h / 100.0).first[0];
    const double dev = (xe.array() - ref).abs().maxCoeff();
    if (horizon == T_run) dev_at_T = dev;
    dev_transient = std::max(dev_transient, dev);
  }
  const bool order_ok = std::abs(sweep.order - 1.0) <= 0.2 && !sweep.nonfinite;
  return {order_ok && dev_at_T <= 1e-3,
          "order " + fmt("%.3f", sweep.order) + ", |euler - rk4| at T " + fmt("%.3g", dev_at_T) +
              " (max over t in {2, 5, 10, 30, 100, T}: " + fmt("%.3g", dev_transient) + ")"};
}

}  // namespace

int main() {
  std::map<int, Outcome> results;
  auto timed = [&](int id, const std::function<Outcome()>& fn) {
    const auto start = std::chrono::steady_clock::now();
    try {
      results[id] = fn();
    } catch (const std::exception& e) {
      results[id] = {false, std::string("error: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    results[id].detail += " [" + fmt("%.1f", secs) + " s]";
    std::cerr << "A" << id << " done\n";
  };

  int violations = 0;
  timed(1, oracle_equivalence);

  RateRuns runs;
  timed(2, [&] {
    runs = rate_runs();
    for (const auto& [r, res] : runs.by_r) violations += lemma_violations(res);
    return rate_check(runs, Metric::kFGap, {0.5, 1.0, 1.5}, 0.15);
  });
  timed(3, [&] { return rate_check(runs, Metric::kDistSq, {0.5, 1.0, 1.5}, 0.15); });
  timed(4, [&] { return rate_check(runs, Metric::kYNorm, {0.5, 1.0}, 0.2); });

  BoundRuns bound;
  timed(5, [&] {
    bound = expectation_bound_check();
    violations += bound.violations;
    return bound.outcome;
  });
  timed(6, [&] { return min_norm_selection(violations); });
  timed(7, drift_regularity);
  timed(9, [&] { return martingale_mean(bound.noisy, violations); });
  timed(8, [&] {
    return Outcome{violations == 0,
                   std::to_string(violations) + " violations over the acceptance ensembles"};
  });
  timed(10, reproducibility);
  timed(11, discretization);

  bool all = true;
  for (const auto& [id, o] : results) {
    std::cout << "A" << id << " " << (o.pass ? "PASS" : "FAIL") << " " << o.detail << "\n";
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
