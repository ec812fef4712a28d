#include "strigs/cli/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

namespace strigs::cli {

namespace {

namespace fs = std::filesystem;

class RunDir {
 public:
  RunDir(const RunConfig& cfg, const std::string& command)
      : dir_(fs::path(cfg.output_dir) / cfg.run_id) {
    fs::create_directories(dir_);
    std::ofstream(dir_ / "manifest.cfg") << manifest_text(cfg, command);
  }

  std::ofstream open(const std::string& name) {
    std::ofstream f(dir_ / name);
    if (!f) throw Error(ErrorCode::kInvalidArgument, "cannot write " + (dir_ / name).string());
    written_.push_back((dir_ / name).string());
    return f;
  }

  void report(std::ostream& out) const {
    for (const auto& w : written_) out << "wrote " << w << "\n";
  }

 private:
  fs::path dir_;
  std::vector<std::string> written_;
};

std::vector<std::string> indexed(const std::string& prefix, int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

EnsembleSetup ensemble_setup(const RunConfig& cfg, int n_paths, bool martingale) {
  EnsembleSetup s{cfg.system()};
  s.damping = cfg.energy_damping();
  s.init = cfg.initial_state();
  s.T = cfg.sim.T;
  s.h = cfg.sim.h;
  s.n_paths = n_paths;
  s.master_seed = cfg.sim.seed;
  s.checkpoints = cfg.checkpoints();
  s.scheme = cfg.sim.scheme;
  s.antithetic = cfg.experiment.antithetic && n_paths % 2 == 0;
  s.martingale = martingale && s.damping.has_value() && cfg.sim.kind == SystemKind::kStrigs;
  return s;
}

void write_metrics(std::ostream& f, const EnsembleResult& res) {
  CsvWriter w(f);
  std::vector<std::string> cols{"t"};
  for (Metric m : kAllMetrics) {
    cols.push_back(std::string(to_string(m)) + "_mean");
    cols.push_back(std::string(to_string(m)) + "_se");
  }
  w.header(cols);
  for (std::size_t j = 0; j < res.checkpoints.size(); ++j) {
    w.cell(res.checkpoints[j]);
    for (Metric m : kAllMetrics) w.cell(res.metric(m).mean[j]).cell(res.metric(m).se[j]);
    w.end_row();
  }
}

void write_trajectories(std::ostream& f, const EnsembleResult& res, int dim, bool with_path) {
  CsvWriter w(f);
  std::vector<std::string> cols = concat(indexed("x_", dim), indexed("y_", dim));
  cols.insert(cols.begin(), "t");
  if (with_path) cols.insert(cols.begin(), "path");
  w.header(cols);
  for (std::size_t i = 0; i < res.trajectories.size(); ++i) {
    for (const SimState& s : res.trajectories[i].states) {
      if (with_path) w.cell(static_cast<long long>(i));
      w.cell(s.t);
      for (double v : s.x) w.cell(v);
      for (int k = 0; k < dim; ++k) w.cell(s.y.size() == dim ? s.y[k] : std::nan(""));
      w.end_row();
    }
  }
}

bool has_nan(const std::vector<double>& v) {
  return std::any_of(v.begin(), v.end(), [](double x) { return std::isnan(x); });
}

struct FitRow {
  std::string scope;
  RateFit fit;
};

std::vector<FitRow> fit_all(const RunConfig& cfg, const EnsembleResult& res, std::ostream& err) {
  std::vector<FitRow> rows;
  const double r = cfg.eps.r();
  for (Metric m : cfg.experiment.metrics) {
    const MetricSeries& series = res.metric(m);
    if (has_nan(series.mean)) {
      err << "note: " << to_string(m) << " is undefined for this system; not fitted\n";
      continue;
    }
    const double expected = expected_slope(m, r);
    const double slack = cfg.experiment.slack.at(m);
    rows.push_back({"mean", fit_rate(res, m, cfg.experiment.fit_lo, cfg.experiment.fit_hi,
                                     expected, slack)});
    if (res.n_paths > 1) {
      for (int i = 0; i < res.n_paths; ++i) {
        rows.push_back({"path_" + std::to_string(i),
                        fit_rate(res.checkpoints, series.per_path[i], to_string(m),
                                 cfg.experiment.fit_lo, cfg.experiment.fit_hi, expected, slack)});
      }
    }
  }
  return rows;
}

void write_fits(std::ostream& f, const std::vector<FitRow>& rows) {
  CsvWriter w(f);
  w.header({"scope", "metric", "t_lo", "t_hi", "slope", "intercept", "r_squared", "expected",
            "slack", "pass", "n_points", "floored"});
  for (const auto& [scope, fit] : rows) {
    w.cell(scope).cell(fit.metric).cell(fit.t_lo).cell(fit.t_hi).cell(fit.slope);
    w.cell(fit.intercept).cell(fit.r_squared).cell(fit.expected_slope).cell(fit.slack);
    w.cell(static_cast<long long>(fit.pass)).cell(static_cast<long long>(fit.n_points));
    w.cell(static_cast<long long>(fit.floored));
    w.end_row();
  }
}

// Expectation bound on the checkpoints at or after t1; empty when the energy
// functional does not apply.
std::vector<BoundCheckRow> ensemble_bound(const RunConfig& cfg, const EnsembleResult& res,
                                          BoundCurve* curve_out) {
  if (!cfg.energy_damping() || !cfg.problem.min_norm_minimizer()) return {};
  const double t1 = cfg.damping.t1;
  std::vector<double> grid;
  std::size_t first = res.checkpoints.size();
  for (std::size_t j = 0; j < res.checkpoints.size(); ++j) {
    if (res.checkpoints[j] >= t1 * (1.0 - 1e-9)) {
      if (grid.empty()) first = j;
      grid.push_back(res.checkpoints[j]);
    }
  }
  if (grid.empty()) return {};
  const double e1 = res.metric(Metric::kEnergy).mean[first];
  BoundCurve curve = expectation_bound_curve(cfg.energy_model(), grid, e1);
  auto rows = check_expectation_bound(res, curve, true);
  if (curve_out) *curve_out = std::move(curve);
  return rows;
}

void write_bound(std::ostream& f, const std::vector<BoundCheckRow>& rows, const BoundCurve& c) {
  CsvWriter w(f);
  w.header({"t", "mean", "se", "bound_weak", "bound_strong", "ok"});
  for (std::size_t k = 0; k < rows.size(); ++k) {
    w.cell(rows[k].t).cell(rows[k].mean).cell(rows[k].se).cell(c.weak[k]).cell(c.strong[k]);
    w.cell(static_cast<long long>(rows[k].ok));
    w.end_row();
  }
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  EnsembleSetup setup = ensemble_setup(cfg, 1, false);
  setup.keep_trajectories = true;
  setup.workers = 1;
  const EnsembleResult res = run_ensemble(setup);
  RunDir dir(cfg, "simulate");
  {
    auto f = dir.open("trajectories.csv");
    write_trajectories(f, res, cfg.problem.dim(), false);
  }
  {
    auto f = dir.open("metrics.csv");
    write_metrics(f, res);
  }
  dir.report(out);
  return kExitOk;
}

int cmd_ensemble(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  EnsembleSetup setup = ensemble_setup(cfg, cfg.experiment.n_paths, cfg.experiment.martingale);
  setup.keep_trajectories = true;
  const EnsembleResult res = run_ensemble(setup);
  RunDir dir(cfg, "ensemble");
  {
    auto f = dir.open("trajectories.csv");
    write_trajectories(f, res, cfg.problem.dim(), true);
  }
  {
    auto f = dir.open("metrics.csv");
    write_metrics(f, res);
  }
  {
    auto f = dir.open("paths.csv");
    CsvWriter w(f);
    w.header({"path", "seed", "antithetic", "lemma_violations", "martingale",
              "martingale_linear"});
    for (int i = 0; i < res.n_paths; ++i) {
      const PathSummary& p = res.paths[i];
      w.cell(static_cast<long long>(i)).cell(std::to_string(p.seed));
      w.cell(static_cast<long long>(p.antithetic)).cell(static_cast<long long>(p.lemma_violations));
      w.cell(p.martingale).cell(p.martingale_linear);
      w.end_row();
    }
  }
  BoundCurve curve;
  const auto rows = ensemble_bound(cfg, res, &curve);
  if (!rows.empty()) {
    auto f = dir.open("bound.csv");
    write_bound(f, rows, curve);
    const auto bad = std::count_if(rows.begin(), rows.end(), [](auto& r) { return !r.ok; });
    out << "expectation bound: " << rows.size() - bad << "/" << rows.size()
        << " checkpoints within mean + 3 se\n";
  }
  try {
    const auto fits = fit_all(cfg, res, err);
    auto f = dir.open("ratefit.csv");
    write_fits(f, fits);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kWindowTooSmall) throw;
    err << "note: rate fits skipped: " << e.what() << "\n";
  }
  if (setup.martingale) {
    const MeanCheck mc = martingale_mean_check(res);
    out << "martingale proxy: mean " << format_double(mc.mean) << ", se " << format_double(mc.se)
        << (mc.ok ? " (ok)" : " (outside 3 se)") << "\n";
  }
  dir.report(out);
  return kExitOk;
}

int cmd_rates(const RunConfig& cfg, const CommandOptions& opts, std::ostream& out,
              std::ostream& err) {
  const EnsembleResult res = run_ensemble(ensemble_setup(cfg, cfg.experiment.n_paths, false));
  RunDir dir(cfg, "rates");
  {
    auto f = dir.open("metrics.csv");
    write_metrics(f, res);
  }
  const auto fits = fit_all(cfg, res, err);
  {
    auto f = dir.open("ratefit.csv");
    write_fits(f, fits);
  }
  int failed = 0;
  for (const auto& [scope, fit] : fits) {
    if (!fit.pass) ++failed;
    if (scope != "mean") continue;
    out << fit.metric << ": slope " << format_double(fit.slope) << ", expected <= "
        << format_double(fit.expected_slope + fit.slack) << (fit.pass ? "  PASS" : "  FAIL")
        << "\n";
  }
  if (failed > 0) out << failed << " of " << fits.size() << " fits failed\n";
  dir.report(out);
  return opts.assert_rates && failed > 0 ? kExitAcceptance : kExitOk;
}

int cmd_energy(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.energy_damping()) {
    throw Error(ErrorCode::kValidation, "energy needs sim.kind = strigs or trigs_deterministic");
  }
  EnsembleSetup setup = ensemble_setup(cfg, 1, false);
  setup.keep_trajectories = true;
  setup.workers = 1;
  const EnsembleResult res = run_ensemble(setup);
  const EnergyModel model = cfg.energy_model();
  const double t1 = cfg.damping.t1;
  const auto energies = trajectory_energies(model, res.trajectories[0], t1 * (1.0 - 1e-9));
  if (energies.empty()) throw Error(ErrorCode::kValidation, "sim.T ends before t1");
  std::vector<double> grid;
  for (const auto& e : energies) grid.push_back(e.t);
  const BoundCurve curve = expectation_bound_curve(model, grid, energies.front().energy);
  const auto scaled = scaled_energy_monitor(model, energies);
  const auto gron = gronwall_check(model, energies);

  RunDir dir(cfg, "energy");
  auto f = dir.open("energy.csv");
  CsvWriter w(f);
  w.header({"t", "energy", "phi_gap", "v_norm_sq", "gamma", "log_gamma", "g", "bound_weak",
            "bound_strong", "t_pow_e", "scaled_cap", "gronwall_lhs", "gronwall_rhs",
            "gronwall_ok"});
  int gron_bad = 0, bound_bad = 0, scaled_bad = 0;
  for (std::size_t k = 0; k < energies.size(); ++k) {
    const EnergyReport& e = energies[k];
    const ScaledEnergyRow& s = scaled[k];
    w.cell(e.t).cell(e.energy).cell(e.phi_gap).cell(e.v_norm_sq).cell(e.gamma);
    w.cell(e.log_gamma).cell(e.g_val);
    w.cell(curve.weak[k]).cell(curve.strong[k]).cell(s.t_pow_e);
    w.cell(s.constant + s.initial_term + s.trace_term);
    if (k == 0) {
      w.cell(std::nan("")).cell(std::nan("")).cell(1LL);
    } else {
      const GronwallRow& g = gron[k - 1];
      w.cell(g.lhs).cell(g.rhs).cell(static_cast<long long>(g.ok));
      if (!g.ok) ++gron_bad;
    }
    w.end_row();
    if (e.energy > curve.strong[k] * (1.0 + 1e-9)) ++bound_bad;
    if (!s.within_constant) ++scaled_bad;
  }
  out << "energy samples after t1 = " << format_double(t1) << ": " << energies.size() << "\n";
  out << "above strong bound: " << bound_bad << ", scaled energy above cap: " << scaled_bad
      << ", Gronwall violations: " << gron_bad << "\n";
  dir.report(out);
  return kExitOk;
}

int cmd_path(const RunConfig& cfg, std::ostream& out) {
  const auto times = log_checkpoints(cfg.sim.t0, cfg.sim.T, cfg.sim.checkpoints_per_decade);
  const int dim = cfg.problem.dim();
  RunDir dir(cfg, "path");
  auto f = dir.open("path.csv");
  CsvWriter w(f);
  std::vector<std::string> cols{"t", "eps"};
  cols = concat(cols, indexed("x_eps_", dim));
  cols = concat(cols, {"norm_x_eps", "residual", "converged", "fd_norm", "fd_bound"});
  w.header(cols);
  std::optional<Vec> warm;
  for (double t : times) {
    const PathPoint p = solve_path_point(cfg.problem, cfg.eps, t, warm);
    warm = p.x_eps;
    const double fd_h = 1e-3 * t;
    PathSlopeCheck slope{std::nan(""), std::nan(""), false};
    if (t - fd_h > cfg.eps.t0()) slope = path_slope_check(cfg.problem, cfg.eps, t, fd_h);
    w.cell(t).cell(p.eps);
    for (double v : p.x_eps) w.cell(v);
    w.cell(p.x_eps.norm()).cell(p.residual).cell(static_cast<long long>(p.converged));
    w.cell(slope.fd_norm).cell(slope.bound);
    w.end_row();
  }
  dir.report(out);
  return kExitOk;
}

int cmd_check_params(const RunConfig& cfg, std::ostream& out) {
  CsvWriter w(out);
  w.header({"key", "value"});
  w.cell("lambda_lo").cell(cfg.window.lo).end_row();
  w.cell("lambda_hi").cell(cfg.window.hi).end_row();
  w.cell("lambda").cell(cfg.damping.lambda).end_row();
  w.cell("ct_bound").cell(ct_bound(cfg.damping)).end_row();
  w.cell("t1").cell(cfg.damping.t1).end_row();
  const double c_const = (cfg.damping.delta + 1.0 / cfg.damping.c) * cfg.damping.lambda -
                         cfg.damping.lambda * cfg.damping.lambda - 1.0;
  w.cell("energy_constant").cell(c_const).end_row();
  out << "\n";
  w.header({"t", "inv_sqrt_deriv", "ct_bound", "margin", "satisfied"});
  const double lo = cfg.eps.t0();
  const double hi = std::max(100.0 * cfg.damping.t1, 10.0 * lo);
  for (double t : log_checkpoints(lo, hi, 4)) {
    const CtCheck c = check_condition_ct(cfg.eps, cfg.damping, t);
    w.cell(t).cell(cfg.eps.inv_sqrt_deriv(t)).cell(ct_bound(cfg.damping)).cell(c.margin);
    w.cell(static_cast<long long>(c.satisfied)).end_row();
  }
  return kExitOk;
}

int cmd_compare(const RunConfig& cfg, std::ostream& out) {
  CompareSetup s{cfg.problem, cfg.sigma, cfg.eps};
  s.delta = cfg.damping.delta;
  s.savd_alpha = cfg.experiment.savd_alpha;
  s.heavy_ball_mu = cfg.experiment.hb_mu;
  s.gen = cfg.experiment.gen;
  s.x0 = cfg.sim.x0;
  s.t0 = cfg.sim.t0;
  s.T = cfg.sim.T;
  s.h = cfg.sim.h;
  s.seed = derive_seed(cfg.sim.seed, 0);
  s.checkpoints = cfg.checkpoints();
  s.fit_lo = cfg.experiment.fit_lo;
  s.fit_hi = cfg.experiment.fit_hi;
  s.scheme = cfg.sim.scheme;
  const CompareTable table = compare_baselines(s);

  RunDir dir(cfg, "compare");
  {
    auto f = dir.open("compare.csv");
    CsvWriter w(f);
    std::vector<std::string> cols{"t"};
    for (const auto& k : table.kinds) cols.push_back("f_gap_" + k);
    w.header(cols);
    for (std::size_t j = 0; j < table.checkpoints.size(); ++j) {
      w.cell(table.checkpoints[j]);
      for (const auto& series : table.f_gap) w.cell(series[j]);
      w.end_row();
    }
  }
  {
    auto f = dir.open("compare_slopes.csv");
    CsvWriter w(f);
    w.header({"system", "f_gap_slope", "diagnostic"});
    for (std::size_t k = 0; k < table.kinds.size(); ++k) {
      w.cell(table.kinds[k]).cell(table.slopes[k]).cell(table.diagnostics[k]).end_row();
      out << table.kinds[k] << ": f_gap slope " << format_double(table.slopes[k])
          << (table.diagnostics[k].empty() ? "" : "  (" + table.diagnostics[k] + ")") << "\n";
    }
  }
  dir.report(out);
  return kExitOk;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"simulate", "ensemble",     "rates",  "energy",
                                                 "path",     "check-params", "compare"};
  return names;
}

int run_command(const std::string& name, const RunConfig& config, const CommandOptions& options,
                std::ostream& out, std::ostream& err) {
  try {
    if (name == "simulate") return cmd_simulate(config, out);
    if (name == "ensemble") return cmd_ensemble(config, out, err);
    if (name == "rates") return cmd_rates(config, options, out, err);
    if (name == "energy") return cmd_energy(config, out);
    if (name == "path") return cmd_path(config, out);
    if (name == "check-params") return cmd_check_params(config, out);
    if (name == "compare") return cmd_compare(config, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::kValidation:
      case ErrorCode::kParse:
      case ErrorCode::kInfeasibleParams:
      case ErrorCode::kInvalidArgument:
      case ErrorCode::kDimensionMismatch:
      case ErrorCode::kWindowTooSmall:
        return kExitValidation;
      default:
        return kExitRuntime;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  err << "unknown subcommand '" << name << "'\n";
  return kExitUsage;
}

}  // namespace strigs::cli
