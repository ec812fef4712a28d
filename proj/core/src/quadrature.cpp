#include "strigs/quadrature.hpp"

#include <cmath>
#include <limits>

#include "strigs/error.hpp"

namespace strigs {

double simpson(const ScalarFn& f, double a, double b, int n) {
  if (n < 2) n = 2;
  if (n % 2 != 0) ++n;
  const double h = (b - a) / n;
  double odd = 0.0;
  double even = 0.0;
  for (int i = 1; i < n; ++i) {
    const double v = f(a + i * h);
    (i % 2 == 1 ? odd : even) += v;
  }
  return h / 3.0 * (f(a) + 4.0 * odd + 2.0 * even + f(b));
}

double simpson_log(const ScalarFn& f, double a, double b, int n) {
  if (!(a > 0.0) || b < a) {
    throw Error(ErrorCode::kInvalidArgument, "simpson_log needs 0 < a <= b");
  }
  if (a == b) return 0.0;
  return simpson([&f](double u) {
    const double s = std::exp(u);
    const double v = f(s);
    // Integrands that underflow to zero stay zero even when e^u is large.
    return v == 0.0 ? 0.0 : v * s;
  }, std::log(a), std::log(b), n);
}

QuadratureResult simpson_log_refined(const ScalarFn& f, double a, double b, double rel_tol,
                                     int start_intervals, int max_intervals) {
  int n = start_intervals;
  double prev = simpson_log(f, a, b, n);
  while (n < max_intervals) {
    n *= 2;
    const double next = simpson_log(f, a, b, n);
    if (!std::isfinite(next)) return {next, false, n};
    if (std::abs(next - prev) <= rel_tol * std::abs(next) || next == prev) {
      return {next, true, n};
    }
    prev = next;
  }
  return {prev, false, n};
}

TailIntegral integrate_to_infinity(const ScalarFn& f, double a, double rel_tol,
                                   int max_decades) {
  TailIntegral out;
  double lo = a;
  double prev_piece = 0.0, prev_ratio = 0.0;
  for (int k = 0; k < max_decades; ++k) {
    const double hi = lo * 10.0;
    const double piece = simpson_log_refined(f, lo, hi, 1e-12).value;
    out.value += piece;
    out.upper = hi;
    if (!std::isfinite(out.value)) {
      out.value = std::numeric_limits<double>::infinity();
      out.converged = false;
      return out;
    }
    if (std::abs(piece) <= rel_tol * std::abs(out.value)) {
      out.converged = true;
      return out;
    }
    const double ratio = prev_piece > 0.0 && piece > 0.0 ? piece / prev_piece : 0.0;
    if (ratio > 0.0 && ratio < 0.9 && std::abs(ratio - prev_ratio) <= 1e-3 * ratio) {
      const double tail = piece * ratio / (1.0 - ratio);
      if (tail <= kGeometricTailTol * out.value) {
        out.value += tail;
        out.converged = true;
        return out;
      }
    }
    prev_ratio = ratio;
    prev_piece = piece;
    lo = hi;
  }
  out.converged = false;
  return out;
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace strigs
