#include "strigs/tikhonov_path.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "strigs/error.hpp"

namespace strigs {

double phi_eval(const ConvexProblem& problem, double eps, const Vec& x) {
  return problem.eval(x) + 0.5 * eps * x.squaredNorm();
}

namespace {

double residual_norm(const ConvexProblem& problem, double eps, const Vec& x, Vec& g) {
  problem.grad(x, g);
  g += eps * x;
  return g.norm();
}

}  // namespace

PathPoint solve_x_eps(const ConvexProblem& problem, double eps, const std::optional<Vec>& warm_start,
                      const PathSolverOptions& options) {
  if (!(eps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "solve_x_eps needs eps > 0");
  if (!(options.tol > 0.0)) throw Error(ErrorCode::kInvalidArgument, "solve_x_eps needs tol > 0");

  PathPoint out;
  out.t = std::nan("");
  out.eps = eps;
  Vec g(problem.dim());

  if (options.use_closed_form && problem.has_regularized_argmin()) {
    out.x_eps = problem.regularized_argmin(eps);
    out.residual = residual_norm(problem, eps, out.x_eps, g);
    out.closed_form = true;
    return out;
  }

  // phi is eps-strongly convex with (L + eps)-Lipschitz gradient, so
  // |x - x_eps| <= |grad phi(x)| / eps.
  const double smooth = problem.lipschitz() + eps;
  const double step = 1.0 / smooth;
  const double q = std::sqrt(eps / smooth);
  const double momentum = (1.0 - q) / (1.0 + q);
  Vec x = warm_start.value_or(Vec::Zero(problem.dim()));
  if (x.size() != problem.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "warm start has the wrong dimension");
  }
  // Below this the residual is rounding noise in grad f.
  const double grad0 = problem.grad(Vec::Zero(problem.dim())).norm();
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() *
                       (grad0 + problem.lipschitz() * std::max(x.norm(), 1.0));
  const double target = std::max(options.tol * eps, floor);
  Vec z = x;
  Vec x_next(problem.dim());
  Vec best = x;
  double best_res = residual_norm(problem, eps, x, g);
  double phi_x = phi_eval(problem, eps, x);
  int iter = 0;

  if (best_res > target) {
    residual_norm(problem, eps, z, g);
    for (iter = 1; iter <= options.max_iters; ++iter) {
      x_next = z - step * g;
      const double phi_next = phi_eval(problem, eps, x_next);
      const double res = residual_norm(problem, eps, x_next, g);
      if (res < best_res) {
        best_res = res;
        best = x_next;
      }
      if (res <= target) break;
      if (phi_next > phi_x) {
        // Restart: drop momentum; g already holds grad phi(x_next).
        z = x_next;
      } else {
        z = x_next + momentum * (x_next - x);
        residual_norm(problem, eps, z, g);
      }
      x.swap(x_next);
      phi_x = phi_next;
    }
  }
  out.x_eps = best;
  out.residual = best_res;
  out.solver_iters = std::min(iter, options.max_iters);
  out.converged = best_res <= target;
  return out;
}

PathPoint solve_path_point(const ConvexProblem& problem, const EpsilonSchedule& eps, double t,
                           const std::optional<Vec>& warm_start,
                           const PathSolverOptions& options) {
  PathPoint p = solve_x_eps(problem, eps.eval(t), warm_start, options);
  p.t = t;
  return p;
}

PathDerivativeBound path_derivative_bound(const ConvexProblem& problem,
                                          const EpsilonSchedule& eps, double t,
                                          const PathSolverOptions& options) {
  const PathPoint point = solve_path_point(problem, eps, t, std::nullopt, options);
  if (!point.converged) {
    throw Error(ErrorCode::kMaxIterations, "x_eps solve did not converge at t = " +
                                               std::to_string(t));
  }
  const double rate = -eps.deriv(t) / eps.eval(t);
  PathDerivativeBound b;
  b.fine = rate * point.x_eps.norm();
  const auto& x_star = problem.min_norm_minimizer();
  b.coarse = x_star ? rate * x_star->norm() : std::numeric_limits<double>::quiet_NaN();
  return b;
}

PathSlopeCheck path_slope_check(const ConvexProblem& problem, const EpsilonSchedule& eps, double t,
                                double h) {
  if (!(h > 0.0) || !(t - h > eps.t0())) {
    throw Error(ErrorCode::kInvalidArgument, "path_slope_check needs h > 0 and t - h > t0");
  }
  PathSolverOptions tight;
  tight.tol = 1e-13;
  const PathPoint mid = solve_path_point(problem, eps, t, std::nullopt, tight);
  const PathPoint plus = solve_path_point(problem, eps, t + h, mid.x_eps, tight);
  const PathPoint minus = solve_path_point(problem, eps, t - h, mid.x_eps, tight);
  PathSlopeCheck out;
  out.fd_norm = (plus.x_eps - minus.x_eps).norm() / (2.0 * h);
  out.bound = -eps.deriv(t) / eps.eval(t) * mid.x_eps.norm();
  out.ok = out.fd_norm <= out.bound * 1.05;
  return out;
}

}  // namespace strigs
