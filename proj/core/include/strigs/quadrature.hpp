#pragma once

#include <functional>
#include <span>

namespace strigs {

using ScalarFn = std::function<double(double)>;

/// Composite Simpson rule on [a, b] with n (rounded up to even) intervals.
double simpson(const ScalarFn& f, double a, double b, int n);

/// Composite Simpson in log-time: int_a^b f(s) ds = int f(e^u) e^u du on a
/// uniform grid in u = log s. Requires 0 < a <= b.
double simpson_log(const ScalarFn& f, double a, double b, int n);

struct QuadratureResult {
  double value = 0.0;
  bool resolved = false;  // two successive resolutions agreed to rel_tol
  int intervals = 0;
};

/// simpson_log with interval doubling until successive estimates agree to
/// rel_tol (or max_intervals is reached, reported as unresolved).
QuadratureResult simpson_log_refined(const ScalarFn& f, double a, double b,
                                     double rel_tol = 1e-10, int start_intervals = 16,
                                     int max_intervals = 1 << 16);

struct TailIntegral {
  double value = 0.0;
  bool converged = false;
  double upper = 0.0;  // where integration stopped
};

inline constexpr double kGeometricTailTol = 1e-6;

/// int_a^infinity f, accumulated decade by decade until the latest decade adds
/// less than rel_tol of the running total, or until positive decade pieces
/// shrink at a stable ratio q < 0.9 and the geometric remainder q/(1-q) of the
/// last piece is below kGeometricTailTol of the total (the remainder is then
/// added). Nonfinite totals never converge.
TailIntegral integrate_to_infinity(const ScalarFn& f, double a, double rel_tol = 1e-12,
                                   int max_decades = 12);

/// Pairwise summation in index order; result is independent of thread count.
double pairwise_sum(std::span<const double> values);

}  // namespace strigs
