#include "strigs/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "strigs/error.hpp"

namespace strigs {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

const char* to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::kStrigs: return "strigs";
    case SystemKind::kTrigs: return "trigs_deterministic";
    case SystemKind::kSavd: return "savd";
    case SystemKind::kAvdTikhonov: return "avd_tikhonov";
    case SystemKind::kHeavyBall: return "heavy_ball";
    case SystemKind::kSgf: return "sgf";
    case SystemKind::kStrigsGen: return "strigs_gen";
  }
  return "unknown";
}

SystemKind parse_system_kind(const std::string& name) {
  for (SystemKind k : {SystemKind::kStrigs, SystemKind::kTrigs, SystemKind::kSavd,
                       SystemKind::kAvdTikhonov, SystemKind::kHeavyBall, SystemKind::kSgf,
                       SystemKind::kStrigsGen}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown system kind '" + name + "'");
}

const char* to_string(Scheme scheme) {
  return scheme == Scheme::kSemiImplicit ? "semi_implicit" : "explicit";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "semi_implicit") return Scheme::kSemiImplicit;
  if (name == "explicit") return Scheme::kExplicit;
  throw Error(ErrorCode::kInvalidArgument, "unknown integration scheme '" + name + "'");
}

SystemKind SystemSpec::kind() const {
  return std::visit(Overloaded{
                        [](const StrigsParams&) { return SystemKind::kStrigs; },
                        [](const TrigsParams&) { return SystemKind::kTrigs; },
                        [](const SavdParams&) { return SystemKind::kSavd; },
                        [](const AvdTikhonovParams&) { return SystemKind::kAvdTikhonov; },
                        [](const HeavyBallParams&) { return SystemKind::kHeavyBall; },
                        [](const SgfParams&) { return SystemKind::kSgf; },
                        [](const StrigsGenParams&) { return SystemKind::kStrigsGen; },
                    },
                    params);
}

const EpsilonSchedule* SystemSpec::eps() const {
  if (const auto* p = std::get_if<StrigsParams>(&params)) return &p->eps;
  if (const auto* p = std::get_if<TrigsParams>(&params)) return &p->eps;
  if (const auto* p = std::get_if<AvdTikhonovParams>(&params)) return &p->eps;
  return nullptr;
}

bool SystemSpec::noisy() const { return kind() != SystemKind::kTrigs && !sigma.is_zero(); }

bool SimState::finite() const { return x.allFinite() && y.allFinite(); }

void drift_into(const SystemSpec& spec, const SimState& s, Vec& grad_buf, Vec& dx, Vec& dy) {
  spec.problem.grad(s.x, grad_buf);
  const double t = s.t;
  std::visit(Overloaded{
                 [&](const StrigsParams& p) {
                   const double e = p.eps.eval(t);
                   dx = s.y;
                   dy = -p.delta * std::sqrt(e) * s.y - grad_buf - e * s.x;
                 },
                 [&](const TrigsParams& p) {
                   const double e = p.eps.eval(t);
                   dx = s.y;
                   dy = -p.delta * std::sqrt(e) * s.y - grad_buf - e * s.x;
                 },
                 [&](const SavdParams& p) {
                   dx = s.y;
                   dy = -(p.alpha / t) * s.y - grad_buf;
                 },
                 [&](const AvdTikhonovParams& p) {
                   const double e = p.eps.eval(t);
                   dx = s.y;
                   dy = -(p.alpha / t) * s.y - grad_buf - e * s.x;
                 },
                 [&](const HeavyBallParams& p) {
                   dx = s.y;
                   dy = -2.0 * std::sqrt(p.mu) * s.y - grad_buf;
                 },
                 [&](const SgfParams&) {
                   dx = -grad_buf;
                   dy.resize(0);
                 },
                 [&](const StrigsGenParams& p) {
                   dx = s.y;
                   dy = -(p.alpha * std::pow(t, -p.q)) * s.y - grad_buf -
                        (p.a * std::pow(t, -p.p)) * s.x;
                 },
             },
             spec.params);
}

Drift drift(const SystemSpec& spec, const SimState& s) {
  Drift d;
  Vec g(spec.problem.dim());
  drift_into(spec, s, g, d.dx, d.dy);
  return d;
}

LipschitzWitness drift_lipschitz_witness(const SystemSpec& spec, double t, const Vec& x1,
                                         const Vec& y1, const Vec& x2, const Vec& y2) {
  double delta = 0.0;
  const EpsilonSchedule* eps = nullptr;
  if (const auto* p = std::get_if<StrigsParams>(&spec.params)) {
    delta = p->delta;
    eps = &p->eps;
  } else if (const auto* p = std::get_if<TrigsParams>(&spec.params)) {
    delta = p->delta;
    eps = &p->eps;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "drift_lipschitz_witness needs a strigs system");
  }
  const Drift d1 = drift(spec, {t, x1, y1});
  const Drift d2 = drift(spec, {t, x2, y2});
  const double e = eps->eval(t);
  const double L = spec.problem.lipschitz();
  LipschitzWitness w;
  w.lhs = (d1.dx - d2.dx).squaredNorm() + (d1.dy - d2.dy).squaredNorm();
  const double constant = std::max(1.0 + 3.0 * delta * delta * e, 3.0 * (e * e + L * L));
  w.bound = constant * ((x1 - x2).squaredNorm() + (y1 - y2).squaredNorm());
  w.ok = w.lhs <= w.bound * (1.0 + 1e-12);
  return w;
}

namespace {

// Reusable buffers for in-place stepping.
struct Stepper {
  const SystemSpec& spec;
  Scheme scheme;
  Vec grad, dx, dy, noise;

  Stepper(const SystemSpec& s, Scheme sc)
      : spec(s), scheme(sc), grad(s.problem.dim()), dx(s.problem.dim()), dy(s.problem.dim()),
        noise(s.problem.dim()) {}

  // dw is the Brownian increment sqrt(h) xi, or nullptr for no noise.
  void step(SimState& s, double h, const Vec* dw) {
    drift_into(spec, s, grad, dx, dy);
    if (spec.first_order()) {
      s.x += h * dx;
      if (dw) spec.sigma.apply_add(s.t, *dw, s.x);
      return;
    }
    if (scheme == Scheme::kExplicit) {
      s.x += h * dx;
      s.y += h * dy;
      if (dw) spec.sigma.apply_add(s.t, *dw, s.y);
    } else {
      s.y += h * dy;
      if (dw) spec.sigma.apply_add(s.t, *dw, s.y);
      s.x += h * s.y;
    }
  }
};

std::vector<std::int64_t> checkpoint_indices(double t_init, double h, std::int64_t n_steps,
                                             const std::vector<double>& checkpoints) {
  std::vector<std::int64_t> idx{0, n_steps};
  for (double c : checkpoints) {
    idx.push_back(std::clamp<std::int64_t>(grid_index(t_init, h, c), 0, n_steps));
  }
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

std::int64_t step_count(double t_init, double T, double h) {
  if (!(h > 0.0)) throw Error(ErrorCode::kInvalidArgument, "step size must be positive");
  if (!(T > t_init)) throw Error(ErrorCode::kInvalidArgument, "integration needs T > t_init");
  return std::max<std::int64_t>(1, grid_index(t_init, h, T));
}

void check_state_shape(const SystemSpec& spec, const SimState& s) {
  const int d = spec.problem.dim();
  if (s.x.size() != d || (!spec.first_order() && s.y.size() != d)) {
    throw Error(ErrorCode::kDimensionMismatch, "initial state does not match problem dimension");
  }
}

}  // namespace

SimState em_step(const SystemSpec& spec, const SimState& s, double h, const Vec& noise,
                 Scheme scheme) {
  if (!(h > 0.0)) throw Error(ErrorCode::kInvalidArgument, "em_step needs h > 0");
  check_state_shape(spec, s);
  Stepper stepper(spec, scheme);
  SimState out = s;
  const Vec dw = std::sqrt(h) * noise;
  stepper.step(out, h, spec.noisy() ? &dw : nullptr);
  out.t = s.t + h;
  if (!out.finite()) {
    std::ostringstream msg;
    msg << "nonfinite state after step at t = " << s.t;
    throw Error(ErrorCode::kNonfiniteState, msg.str());
  }
  return out;
}

std::int64_t grid_index(double t_init, double h, double c) {
  return static_cast<std::int64_t>(std::llround((c - t_init) / h));
}

std::vector<double> log_checkpoints(double t_init, double T, int per_decade) {
  if (!(t_init > 0.0) || !(T > t_init) || per_decade < 1) {
    throw Error(ErrorCode::kInvalidArgument, "log_checkpoints needs 0 < t_init < T");
  }
  std::vector<double> out;
  const double decades = std::log10(T / t_init);
  const auto n = static_cast<int>(std::floor(decades * per_decade + 1e-9));
  for (int k = 0; k <= n; ++k) {
    out.push_back(t_init * std::pow(10.0, static_cast<double>(k) / per_decade));
  }
  if (out.back() < T * (1.0 - 1e-12)) out.push_back(T);
  return out;
}

Trajectory integrate(const SystemSpec& spec, const SimState& init, double T, double h,
                     std::uint64_t seed, const std::vector<double>& checkpoints,
                     const IntegrateOptions& options) {
  check_state_shape(spec, init);
  const double t_init = init.t;
  const std::int64_t n_steps = step_count(t_init, T, h);
  const auto marks = checkpoint_indices(t_init, h, n_steps, checkpoints);

  Trajectory traj;
  traj.seed = seed;
  traj.antithetic = options.antithetic;
  traj.step_h = h;
  traj.grid.reserve(marks.size());
  traj.states.reserve(marks.size());

  const BrownianSource source(seed, options.antithetic);
  const bool noisy = spec.noisy();
  const double sqrt_h = std::sqrt(h);
  Stepper stepper(spec, options.scheme);
  Vec dw = Vec::Zero(spec.problem.dim());
  SimState s = init;
  std::size_t next_mark = 0;

  for (std::int64_t k = 0;; ++k) {
    s.t = t_init + static_cast<double>(k) * h;
    if (next_mark < marks.size() && marks[next_mark] == k) {
      traj.grid.push_back(s.t);
      traj.states.push_back(s);
      ++next_mark;
    }
    if (k == n_steps) break;
    if (noisy) {
      source.standard_normals(static_cast<std::uint64_t>(k), dw);
      dw *= sqrt_h;
    }
    if (options.observer) options.observer(k, s, dw);
    stepper.step(s, h, noisy ? &dw : nullptr);
    if (!s.finite()) {
      std::ostringstream msg;
      msg << "nonfinite state at step " << (k + 1) << " (t = " << t_init + (k + 1) * h
          << "), seed " << seed;
      traj.ok = false;
      traj.diagnostic = msg.str();
      break;
    }
  }
  return traj;
}

Trajectory integrate_rk4(const SystemSpec& spec, const SimState& init, double T, double h,
                         const std::vector<double>& checkpoints) {
  check_state_shape(spec, init);
  if (spec.first_order()) {
    throw Error(ErrorCode::kInvalidArgument, "integrate_rk4 supports second-order systems");
  }
  const double t_init = init.t;
  const std::int64_t n_steps = step_count(t_init, T, h);
  const auto marks = checkpoint_indices(t_init, h, n_steps, checkpoints);
  const int d = spec.problem.dim();

  Trajectory traj;
  traj.step_h = h;
  Vec g(d), k1x(d), k1y(d), k2x(d), k2y(d), k3x(d), k3y(d), k4x(d), k4y(d);
  SimState s = init;
  SimState stage = init;
  std::size_t next_mark = 0;
  for (std::int64_t k = 0;; ++k) {
    s.t = t_init + static_cast<double>(k) * h;
    if (next_mark < marks.size() && marks[next_mark] == k) {
      traj.grid.push_back(s.t);
      traj.states.push_back(s);
      ++next_mark;
    }
    if (k == n_steps) break;
    drift_into(spec, s, g, k1x, k1y);
    stage.t = s.t + 0.5 * h;
    stage.x = s.x + 0.5 * h * k1x;
    stage.y = s.y + 0.5 * h * k1y;
    drift_into(spec, stage, g, k2x, k2y);
    stage.x = s.x + 0.5 * h * k2x;
    stage.y = s.y + 0.5 * h * k2y;
    drift_into(spec, stage, g, k3x, k3y);
    stage.t = s.t + h;
    stage.x = s.x + h * k3x;
    stage.y = s.y + h * k3y;
    drift_into(spec, stage, g, k4x, k4y);
    s.x += (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    s.y += (h / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
    if (!s.finite()) {
      traj.ok = false;
      traj.diagnostic = "nonfinite state in RK4 reference";
      break;
    }
  }
  return traj;
}

StepSweepReport step_size_sweep(const SystemSpec& spec, const SimState& init, double T,
                                const std::vector<double>& h_list,
                                const std::vector<double>& checkpoints, Scheme scheme) {
  if (h_list.size() < 2) throw Error(ErrorCode::kInvalidArgument, "step sweep needs >= 2 steps");
  for (std::size_t i = 1; i < h_list.size(); ++i) {
    if (!(h_list[i] < h_list[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument, "step sweep h_list must be descending");
    }
  }
  SystemSpec quiet = spec;
  quiet.sigma = DiffusionSchedule::zero(spec.problem.dim());

  // Snap checkpoints to the coarsest grid so every finer grid hits them.
  const double h0 = h_list.front();
  std::vector<double> shared;
  for (double c : checkpoints) {
    shared.push_back(init.t + static_cast<double>(grid_index(init.t, h0, c)) * h0);
  }
  const double T_shared = init.t + static_cast<double>(grid_index(init.t, h0, T)) * h0;

  StepSweepReport report;
  report.h_list = h_list;
  IntegrateOptions opts;
  opts.scheme = scheme;
  std::vector<Trajectory> runs;
  for (double h : h_list) {
    runs.push_back(integrate(quiet, init, T_shared, h, 0, shared, opts));
    if (!runs.back().ok) report.nonfinite = true;
  }

  double scale = 0.0;
  for (std::size_t i = 1; i < runs.size(); ++i) {
    const Trajectory& a = runs[i - 1];
    const Trajectory& b = runs[i];
    double dev = 0.0;
    if (!a.ok || !b.ok || a.states.size() != b.states.size()) {
      dev = std::numeric_limits<double>::infinity();
    } else {
      for (std::size_t k = 0; k < a.states.size(); ++k) {
        dev = std::max(dev, (a.states[k].x - b.states[k].x).lpNorm<Eigen::Infinity>());
        if (a.states[k].y.size() > 0) {
          dev = std::max(dev, (a.states[k].y - b.states[k].y).lpNorm<Eigen::Infinity>());
        }
        if (!std::isfinite(dev)) break;
      }
    }
    report.deviations.push_back(dev);
  }
  for (const SimState& s : runs.back().states) {
    scale = std::max({scale, s.x.lpNorm<Eigen::Infinity>(),
                      s.y.size() > 0 ? s.y.lpNorm<Eigen::Infinity>() : 0.0});
  }

  // Slope of log deviation against log of the coarser step of each pair.
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < report.deviations.size(); ++i) {
    const double dev = report.deviations[i];
    if (dev > 0.0 && std::isfinite(dev)) {
      lx.push_back(std::log(h_list[i]));
      ly.push_back(std::log(dev));
    }
  }
  if (lx.size() >= 2) {
    const double n = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      mx += lx[i];
      my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxx += (lx[i] - mx) * (lx[i] - mx);
      sxy += (lx[i] - mx) * (ly[i] - my);
    }
    report.order = sxy / sxx;
  }
  const double last = report.deviations.back();
  report.converged = !report.nonfinite && std::isfinite(last) && last < 1e-4 * (1.0 + scale);
  return report;
}

}  // namespace strigs
