#pragma once

// Energy functional of the Tikhonov-regularized inertial system
//
//   E(t,x,y) = phi_t(x) - phi_t(x_eps(t)) + 1/2 |V|^2,
//   V(t,x,y) = lambda sqrt(eps(t)) (x - x_eps(t)) + y,
//
// together with mu(t) = -eps'/(2 eps) + (delta - lambda) sqrt(eps),
// gamma(t) = exp(int_{t1}^t mu), G(t) = (a+c) lambda eps'^2 / eps^{3/2} - eps'
// and the expectation bound built from them.

#include <optional>
#include <vector>

#include "strigs/dynamics.hpp"
#include "strigs/problem_models.hpp"
#include "strigs/schedules.hpp"
#include "strigs/tikhonov_path.hpp"

namespace strigs {

struct EnergyModel {
  ConvexProblem problem;
  EpsilonSchedule eps;
  DampingParams damping;
  DiffusionSchedule sigma;
};

struct EnergyReport {
  double t = 0.0;
  double phi_gap = 0.0;
  double v_norm_sq = 0.0;
  double energy = 0.0;
  double gamma = 0.0;  // may be +inf for steep schedules; log_gamma is exact
  double log_gamma = 0.0;
  double g_val = 0.0;
  double mu_val = 0.0;
  std::optional<double> bound;
};

struct BoundConstants {
  double lambda0 = 0.0;  // (a+c) lambda
  double delta0 = 0.0;   // 2 (delta - lambda) / (2 - r)
  double c1 = 0.0;       // (t1^{r/2} exp(delta0 t1^{(2-r)/2}))^{-1}
  double log_c1 = 0.0;
  double rho = 0.0;
};

/// Power schedules only.
BoundConstants bound_constants(const DampingParams& damping, const EpsilonSchedule& eps);

Vec v_eval(const DampingParams& damping, const EpsilonSchedule& eps, double t, const Vec& x,
           const Vec& y, const Vec& x_eps);

EnergyReport energy_eval(const ConvexProblem& problem, const DampingParams& damping,
                         const EpsilonSchedule& eps, double t, const Vec& x, const Vec& y,
                         const PathPoint& path_point);

struct AuxValues {
  double mu = 0.0;
  double gamma = 0.0;
  double log_gamma = 0.0;
  double g = 0.0;
};

/// Closed-form gamma for power schedules, refined quadrature of mu otherwise.
AuxValues mu_gamma_g(const DampingParams& damping, const EpsilonSchedule& eps, double t1,
                     double t);

/// log gamma(t) relative to t1.
double log_gamma(const DampingParams& damping, const EpsilonSchedule& eps, double t1, double t);

struct BoundCurve {
  std::vector<double> t;
  std::vector<double> initial_term;  // gamma(t1)/gamma(t) E(t1)
  std::vector<double> g_term;        // 1/gamma(t) int_{t1}^t |x*|^2/2 G gamma
  std::vector<double> weak;          // + int_{t1}^inf |sigma|^2
  std::vector<double> strong;        // + 1/gamma(t) int_{t1}^inf gamma |sigma|^2
  double sigma_integral = 0.0;
  bool sigma_integral_converged = false;
  double weighted_sigma_integral = 0.0;
  bool weighted_sigma_converged = false;
  bool quadrature_resolved = true;  // every G-term piece agreed under doubling to 1e-6
};

/// Expectation bound evaluated on an increasing grid with grid.front() == t1.
/// The G-term is propagated interval by interval, each piece integrated with
/// Simpson refinement until doubling agrees to 1e-6 relative.
BoundCurve expectation_bound_curve(const EnergyModel& model, const std::vector<double>& grid,
                                   double e_at_t1);

/// Single-time bound; +inf when the required sigma integral diverges.
double expectation_bound(const EnergyModel& model, double t, double e_at_t1, bool strong);

struct LemmaCheck {
  bool f_gap_ok = false;
  bool dist_ok = false;
  double f_gap = 0.0;
  double f_gap_bound = 0.0;
  double dist_sq = 0.0;
  double dist_bound = 0.0;
};

/// f(x) - inf f <= E + eps/2 |x*|^2 and |x - x_eps|^2 <= 2E/eps, both with
/// tolerance 1e-9 (1 + |E|).
LemmaCheck lemma_estimates(const ConvexProblem& problem, double eps_t, const EnergyReport& report,
                           const Vec& x, const Vec& x_eps);

struct ScaledEnergyRow {
  double t = 0.0;
  double energy = 0.0;
  double t_pow_e = 0.0;         // t^{(r+2)/2} E
  double constant = 0.0;        // r / (2 rho)
  double initial_term = 0.0;    // t^{(r+2)/2} gamma(t1) E(t1) / gamma(t)
  double trace_term = 0.0;      // t^{(r+2)/2}/gamma(t) int_{t1}^t gamma tr(sigma sigma^*)/2
  bool within_constant = false; // t_pow_e <= constant + initial_term + trace_term
};

/// Energies at the stored states with t >= t_from, x_eps warm-started along the path.
std::vector<EnergyReport> trajectory_energies(const EnergyModel& model, const Trajectory& traj,
                                              double t_from, const PathSolverOptions& options = {});

std::vector<ScaledEnergyRow> scaled_energy_monitor(const EnergyModel& model,
                                                   const std::vector<EnergyReport>& energies);

struct GronwallRow {
  double t_lo = 0.0;
  double t_hi = 0.0;
  double lhs = 0.0;  // (gamma E)(t_hi) - (gamma E)(t_lo), in units of gamma(t_hi)
  double rhs = 0.0;  // int gamma G |x*|^2/2, same units
  bool ok = false;
};

/// Discrete form of d(gamma E) <= gamma G |x*|^2/2 dt for sigma = 0, checked
/// between consecutive energy samples with 1e-2 relative tolerance.
std::vector<GronwallRow> gronwall_check(const EnergyModel& model,
                                        const std::vector<EnergyReport>& energies,
                                        double rel_tol = 1e-2);

}  // namespace strigs
