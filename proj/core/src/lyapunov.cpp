#include "strigs/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "strigs/error.hpp"

namespace strigs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double mu_at(const DampingParams& d, const EpsilonSchedule& eps, double t) {
  const double e = eps.eval(t);
  return -eps.deriv(t) / (2.0 * e) + (d.delta - d.lambda) * std::sqrt(e);
}

double g_at(const DampingParams& d, const EpsilonSchedule& eps, double t) {
  const double e = eps.eval(t);
  const double de = eps.deriv(t);
  return (d.a + d.c) * d.lambda * de * de / (e * std::sqrt(e)) - de;
}

const Vec& require_x_star(const ConvexProblem& problem) {
  const auto& x_star = problem.min_norm_minimizer();
  if (!x_star) {
    throw Error(ErrorCode::kInvalidArgument,
                problem.name() + ": energy bounds need the minimum-norm minimizer");
  }
  return *x_star;
}

// Integral of f(s) exp(log_gamma(s) - anchor) over [lo, hi]; the anchor keeps
// the exponent near zero where the integrand matters.
QuadratureResult weighted_piece(const EnergyModel& m, const ScalarFn& f, double lo, double hi,
                                double anchor) {
  const double t1 = m.damping.t1;
  auto integrand = [&](double s) {
    const double v = f(s);
    if (v == 0.0) return 0.0;
    return v * std::exp(log_gamma(m.damping, m.eps, t1, s) - anchor);
  };
  return simpson_log_refined(integrand, lo, hi, 1e-8, 8, 1 << 14);
}

}  // namespace

double log_gamma(const DampingParams& damping, const EpsilonSchedule& eps, double t1, double t) {
  if (eps.kind() == EpsilonKind::kPower) {
    const double r = eps.r();
    const double delta0 = 2.0 * (damping.delta - damping.lambda) / (2.0 - r);
    const double k = 1.0 - 0.5 * r;
    return 0.5 * r * std::log(t / t1) + delta0 * (std::pow(t, k) - std::pow(t1, k));
  }
  if (t == t1) return 0.0;
  const double lo = std::min(t, t1);
  const double hi = std::max(t, t1);
  const double v =
      simpson_log_refined([&](double s) { return mu_at(damping, eps, s); }, lo, hi, 1e-13).value;
  return t >= t1 ? v : -v;
}

AuxValues mu_gamma_g(const DampingParams& damping, const EpsilonSchedule& eps, double t1,
                     double t) {
  AuxValues out;
  out.mu = mu_at(damping, eps, t);
  out.g = g_at(damping, eps, t);
  out.log_gamma = log_gamma(damping, eps, t1, t);
  out.gamma = std::exp(out.log_gamma);
  return out;
}

BoundConstants bound_constants(const DampingParams& damping, const EpsilonSchedule& eps) {
  if (eps.kind() != EpsilonKind::kPower) {
    throw Error(ErrorCode::kInvalidArgument, "bound constants need a power eps schedule");
  }
  const double r = eps.r();
  BoundConstants b;
  b.lambda0 = (damping.a + damping.c) * damping.lambda;
  b.delta0 = 2.0 * (damping.delta - damping.lambda) / (2.0 - r);
  b.log_c1 = -(0.5 * r * std::log(damping.t1) + b.delta0 * std::pow(damping.t1, 1.0 - 0.5 * r));
  b.c1 = std::exp(b.log_c1);
  b.rho = damping.rho;
  return b;
}

Vec v_eval(const DampingParams& damping, const EpsilonSchedule& eps, double t, const Vec& x,
           const Vec& y, const Vec& x_eps) {
  return damping.lambda * std::sqrt(eps.eval(t)) * (x - x_eps) + y;
}

EnergyReport energy_eval(const ConvexProblem& problem, const DampingParams& damping,
                         const EpsilonSchedule& eps, double t, const Vec& x, const Vec& y,
                         const PathPoint& path_point) {
  const double e = eps.eval(t);
  EnergyReport rep;
  rep.t = t;
  rep.phi_gap = phi_eval(problem, e, x) - phi_eval(problem, e, path_point.x_eps);
  rep.v_norm_sq = v_eval(damping, eps, t, x, y, path_point.x_eps).squaredNorm();
  rep.energy = rep.phi_gap + 0.5 * rep.v_norm_sq;
  const AuxValues aux = mu_gamma_g(damping, eps, damping.t1, t);
  rep.gamma = aux.gamma;
  rep.log_gamma = aux.log_gamma;
  rep.g_val = aux.g;
  rep.mu_val = aux.mu;
  return rep;
}

BoundCurve expectation_bound_curve(const EnergyModel& model, const std::vector<double>& grid,
                                   double e_at_t1) {
  if (grid.empty()) throw Error(ErrorCode::kInvalidArgument, "bound curve needs a grid");
  const double t1 = model.damping.t1;
  if (grid.front() < t1 * (1.0 - 1e-9)) {
    throw Error(ErrorCode::kInvalidArgument, "bound curve grid must start at t1");
  }
  const double half_xs2 = 0.5 * require_x_star(model.problem).squaredNorm();

  BoundCurve c;
  c.t = grid;
  const DiffusionSchedule& sigma = model.sigma;
  if (sigma.is_zero()) {
    c.sigma_integral_converged = c.weighted_sigma_converged = true;
  } else {
    const TailIntegral plain =
        integrate_to_infinity([&](double s) { return sigma.hs_norm_sq(s); }, t1);
    c.sigma_integral = plain.converged ? plain.value : kInf;
    c.sigma_integral_converged = plain.converged;
    const TailIntegral weighted = integrate_to_infinity(
        [&](double s) {
          const double hs = sigma.hs_norm_sq(s);
          return hs > 0.0 ? std::exp(log_gamma(model.damping, model.eps, t1, s) + std::log(hs))
                          : 0.0;
        },
        t1);
    c.weighted_sigma_integral = weighted.converged ? weighted.value : kInf;
    c.weighted_sigma_converged = weighted.converged;
  }

  auto g_integrand = [&](double s) { return half_xs2 * g_at(model.damping, model.eps, s); };
  double g_term = 0.0;
  double prev_t = t1;
  double prev_lg = 0.0;
  for (double t : grid) {
    const double lg = log_gamma(model.damping, model.eps, t1, t);
    if (t > prev_t) {
      const QuadratureResult piece = weighted_piece(model, g_integrand, prev_t, t, lg);
      if (!piece.resolved) c.quadrature_resolved = false;
      g_term = g_term * std::exp(prev_lg - lg) + piece.value;
    }
    prev_t = std::max(prev_t, t);
    prev_lg = log_gamma(model.damping, model.eps, t1, prev_t);
    const double initial = e_at_t1 * std::exp(-lg);
    c.initial_term.push_back(initial);
    c.g_term.push_back(g_term);
    c.weak.push_back(initial + g_term + c.sigma_integral);
    const double strong_sigma = c.weighted_sigma_converged
                                    ? (c.weighted_sigma_integral == 0.0
                                           ? 0.0
                                           : std::exp(std::log(c.weighted_sigma_integral) - lg))
                                    : kInf;
    c.strong.push_back(initial + g_term + strong_sigma);
  }
  return c;
}

double expectation_bound(const EnergyModel& model, double t, double e_at_t1, bool strong) {
  const double t1 = model.damping.t1;
  if (t < t1) throw Error(ErrorCode::kInvalidArgument, "expectation bound needs t >= t1");
  const BoundCurve c = expectation_bound_curve(model, {t1, t}, e_at_t1);
  return strong ? c.strong.back() : c.weak.back();
}

LemmaCheck lemma_estimates(const ConvexProblem& problem, double eps_t, const EnergyReport& report,
                           const Vec& x, const Vec& x_eps) {
  const double xs2 = require_x_star(problem).squaredNorm();
  const double tol = 1e-9 * (1.0 + std::abs(report.energy));
  LemmaCheck out;
  out.f_gap = problem.eval(x) - problem.inf_value();
  out.f_gap_bound = report.energy + 0.5 * eps_t * xs2;
  out.dist_sq = (x - x_eps).squaredNorm();
  out.dist_bound = 2.0 * report.energy / eps_t;
  out.f_gap_ok = out.f_gap <= out.f_gap_bound + tol;
  out.dist_ok = out.dist_sq <= out.dist_bound + tol;
  return out;
}

std::vector<EnergyReport> trajectory_energies(const EnergyModel& model, const Trajectory& traj,
                                              double t_from, const PathSolverOptions& options) {
  std::vector<EnergyReport> out;
  std::optional<Vec> warm;
  for (const SimState& s : traj.states) {
    if (s.t < t_from) continue;
    const PathPoint p = solve_path_point(model.problem, model.eps, s.t, warm, options);
    warm = p.x_eps;
    out.push_back(energy_eval(model.problem, model.damping, model.eps, s.t, s.x, s.y, p));
  }
  return out;
}

std::vector<ScaledEnergyRow> scaled_energy_monitor(const EnergyModel& model,
                                                   const std::vector<EnergyReport>& energies) {
  if (model.eps.kind() != EpsilonKind::kPower) {
    throw Error(ErrorCode::kInvalidArgument, "scaled energy monitor needs a power schedule");
  }
  std::vector<ScaledEnergyRow> rows;
  if (energies.empty()) return rows;
  const double r = model.eps.r();
  const double power = 0.5 * (r + 2.0);
  const double constant = r / (2.0 * model.damping.rho);
  const double e1 = energies.front().energy;
  const DiffusionSchedule& sigma = model.sigma;
  auto half_trace = [&](double s) { return 0.5 * sigma.hs_norm_sq(s); };

  double trace_acc = 0.0;  // 1/gamma(t) int_{t1}^t gamma tr/2, propagated
  double prev_t = energies.front().t;
  double prev_lg = energies.front().log_gamma;
  for (const EnergyReport& rep : energies) {
    if (!sigma.is_zero() && rep.t > prev_t) {
      const double piece = weighted_piece(model, half_trace, prev_t, rep.t, rep.log_gamma).value;
      trace_acc = trace_acc * std::exp(prev_lg - rep.log_gamma) + piece;
    }
    prev_t = rep.t;
    prev_lg = rep.log_gamma;
    ScaledEnergyRow row;
    row.t = rep.t;
    row.energy = rep.energy;
    const double log_pw = power * std::log(rep.t);
    row.t_pow_e = std::exp(log_pw) * rep.energy;
    row.constant = constant;
    row.initial_term = e1 > 0.0 ? std::exp(log_pw - rep.log_gamma + std::log(e1)) : 0.0;
    row.trace_term = trace_acc > 0.0 ? std::exp(log_pw + std::log(trace_acc)) : 0.0;
    const double cap = row.constant + row.initial_term + row.trace_term;
    row.within_constant = row.t_pow_e <= cap * (1.0 + 1e-9);
    rows.push_back(row);
  }
  return rows;
}

std::vector<GronwallRow> gronwall_check(const EnergyModel& model,
                                        const std::vector<EnergyReport>& energies,
                                        double rel_tol) {
  const double half_xs2 = 0.5 * require_x_star(model.problem).squaredNorm();
  auto forcing = [&](double s) {
    return half_xs2 * g_at(model.damping, model.eps, s) + 0.5 * model.sigma.hs_norm_sq(s);
  };
  std::vector<GronwallRow> rows;
  for (std::size_t i = 1; i < energies.size(); ++i) {
    const EnergyReport& a = energies[i - 1];
    const EnergyReport& b = energies[i];
    if (!(b.t > a.t)) continue;
    GronwallRow row;
    row.t_lo = a.t;
    row.t_hi = b.t;
    const double carried = std::exp(a.log_gamma - b.log_gamma) * a.energy;
    row.lhs = b.energy - carried;
    row.rhs = weighted_piece(model, forcing, a.t, b.t, b.log_gamma).value;
    const double scale = std::max({std::abs(b.energy), std::abs(carried), std::abs(row.rhs)});
    row.ok = row.lhs <= row.rhs + rel_tol * scale;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace strigs
