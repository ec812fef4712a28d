#pragma once

#include <optional>

#include "strigs/problem_models.hpp"
#include "strigs/schedules.hpp"

namespace strigs {

struct PathPoint {
  double t = 0.0;
  double eps = 0.0;
  Vec x_eps;
  double residual = 0.0;  // |grad f(x_eps) + eps x_eps|
  int solver_iters = 0;
  bool converged = true;
  bool closed_form = false;
};

struct PathSolverOptions {
  double tol = 1e-9;  // target |x - x_eps| (stop at |grad phi| <= tol * eps or the rounding floor)
  int max_iters = 2'000'000;
  bool use_closed_form = true;
};

/// phi(x) = f(x) + eps/2 |x|^2.
double phi_eval(const ConvexProblem& problem, double eps, const Vec& x);

/// Minimizer of phi. Uses the problem's closed form when available (and
/// allowed); otherwise Nesterov acceleration for the eps-strongly convex phi
/// with step 1/(L+eps), restarted whenever phi increases.
///
/// Hitting max_iters does not throw: the best iterate is returned with
/// converged = false.
PathPoint solve_x_eps(const ConvexProblem& problem, double eps,
                      const std::optional<Vec>& warm_start = std::nullopt,
                      const PathSolverOptions& options = {});

/// solve_x_eps at eps(t), with t recorded.
PathPoint solve_path_point(const ConvexProblem& problem, const EpsilonSchedule& eps, double t,
                           const std::optional<Vec>& warm_start = std::nullopt,
                           const PathSolverOptions& options = {});

struct PathDerivativeBound {
  double fine = 0.0;    // -eps'/eps |x_eps|
  double coarse = 0.0;  // -eps'/eps |x*|, NaN without x*
};

/// |d/dt x_eps(t)| <= -eps'(t)/eps(t) |x_eps(t)| <= -eps'(t)/eps(t) |x*|.
PathDerivativeBound path_derivative_bound(const ConvexProblem& problem,
                                          const EpsilonSchedule& eps, double t,
                                          const PathSolverOptions& options = {});

struct PathSlopeCheck {
  double fd_norm = 0.0;
  double bound = 0.0;
  bool ok = false;
};

/// Central difference |x_eps(t+h) - x_eps(t-h)| / 2h against the fine bound
/// (5% allowance). Requires t - h > t0.
PathSlopeCheck path_slope_check(const ConvexProblem& problem, const EpsilonSchedule& eps,
                                double t, double h);

}  // namespace strigs
