#include "strigs/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "strigs/error.hpp"

namespace strigs {

EpsilonSchedule EpsilonSchedule::power(double r, double t0) {
  if (!(r > 0.0 && r < 2.0)) {
    std::ostringstream msg;
    msg << "eps.r = " << r << " outside the open interval (0, 2)";
    throw Error(ErrorCode::kInvalidArgument, msg.str());
  }
  if (!(t0 > 0.0)) throw Error(ErrorCode::kInvalidArgument, "eps.t0 must be positive");
  EpsilonSchedule s;
  s.kind_ = EpsilonKind::kPower;
  s.r_ = r;
  s.t0_ = t0;
  return s;
}

EpsilonSchedule EpsilonSchedule::custom(ScalarFn eval, ScalarFn deriv, double t0) {
  if (!eval || !deriv) {
    throw Error(ErrorCode::kInvalidArgument, "custom eps schedule needs eval and deriv");
  }
  EpsilonSchedule s;
  s.kind_ = EpsilonKind::kCustom;
  s.r_ = std::nan("");
  s.t0_ = t0;
  s.eval_ = std::move(eval);
  s.deriv_ = std::move(deriv);
  return s;
}

double EpsilonSchedule::eval(double t) const {
  return kind_ == EpsilonKind::kPower ? std::pow(t, -r_) : eval_(t);
}

double EpsilonSchedule::deriv(double t) const {
  return kind_ == EpsilonKind::kPower ? -r_ * std::pow(t, -r_ - 1.0) : deriv_(t);
}

double EpsilonSchedule::inv_sqrt_deriv(double t) const {
  if (kind_ == EpsilonKind::kPower) return 0.5 * r_ * std::pow(t, 0.5 * (r_ - 2.0));
  const double e = eval(t);
  return -deriv(t) / (2.0 * e * std::sqrt(e));
}

DiffusionSchedule DiffusionSchedule::zero(int dim) {
  DiffusionSchedule s;
  s.kind_ = DiffusionKind::kZero;
  s.dim_ = dim;
  return s;
}

DiffusionSchedule DiffusionSchedule::scaled_identity(int dim, ScalarFn scale) {
  DiffusionSchedule s;
  s.kind_ = DiffusionKind::kScaledIdentity;
  s.dim_ = dim;
  s.scale_ = std::move(scale);
  return s;
}

DiffusionSchedule DiffusionSchedule::diagonal(int dim, std::function<Vec(double)> diag) {
  DiffusionSchedule s;
  s.kind_ = DiffusionKind::kDiagonal;
  s.dim_ = dim;
  s.diag_ = std::move(diag);
  return s;
}

double DiffusionSchedule::scale(double t) const {
  switch (kind_) {
    case DiffusionKind::kZero: return 0.0;
    case DiffusionKind::kScaledIdentity: return scale_(t);
    case DiffusionKind::kDiagonal: break;
  }
  throw Error(ErrorCode::kInvalidArgument, "diagonal diffusion has no scalar scale");
}

double DiffusionSchedule::hs_norm_sq(double t) const {
  switch (kind_) {
    case DiffusionKind::kZero: return 0.0;
    case DiffusionKind::kScaledIdentity: {
      return Vec::Constant(dim_, scale_(t)).squaredNorm();
    }
    case DiffusionKind::kDiagonal: return diag_(t).squaredNorm();
  }
  return 0.0;
}

Vec DiffusionSchedule::apply(double t, const Vec& w) const {
  Vec out = Vec::Zero(w.size());
  apply_add(t, w, out);
  return out;
}

void DiffusionSchedule::apply_add(double t, const Vec& w, Vec& out) const {
  switch (kind_) {
    case DiffusionKind::kZero: return;
    case DiffusionKind::kScaledIdentity: out += scale_(t) * w; return;
    case DiffusionKind::kDiagonal: out += diag_(t).cwiseProduct(w); return;
  }
}

DiffusionSchedule exp_diffusion(double r, double alpha, int dim) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::kInvalidArgument, "sigma.alpha must be positive");
  if (!(r > 0.0 && r < 2.0)) {
    throw Error(ErrorCode::kInvalidArgument, "exp diffusion needs 0 < r < 2");
  }
  const double exponent = 1.0 - 0.5 * r + alpha;
  return DiffusionSchedule::scaled_identity(
      dim, [exponent](double t) { return std::exp(-std::pow(t, exponent)); });
}

DiffusionSchedule power_diffusion(double scale, double power, int dim) {
  return DiffusionSchedule::scaled_identity(
      dim, [scale, power](double t) { return scale * std::pow(t, -power); });
}

namespace {

[[noreturn]] void violated(const std::string& what, double value, double limit) {
  std::ostringstream msg;
  msg << what << " (value " << value << ", limit " << limit << ")";
  throw Error(ErrorCode::kValidation, msg.str());
}

}  // namespace

void DampingParams::validate() const {
  if (!(delta > 0.0)) violated("delta <= 0", delta, 0.0);
  if (!(a > 1.0)) violated("a <= 1", a, 1.0);
  if (!(c > 2.0)) violated("c <= 2", c, 2.0);
  if (!(lambda > 0.5 * delta)) violated("lambda <= delta/2", lambda, 0.5 * delta);
  if (!(lambda < delta)) violated("lambda >= delta", lambda, delta);
  const double a_cap = a * delta / (a + 1.0);
  if (!(lambda < a_cap)) violated("lambda >= a*delta/(a+1)", lambda, a_cap);
  if (!(rho > 0.0)) violated("rho <= 0", rho, 0.0);
  const double rho_cap = delta / (a + 1.0);
  if (!(rho < rho_cap)) violated("rho >= delta/(a+1)", rho, rho_cap);
}

double ct_bound(const DampingParams& p) {
  return std::min(2.0 * p.lambda - p.delta, 0.5 * (p.delta - (p.a + 1.0) * p.lambda / p.a));
}

CtCheck check_condition_ct(const EpsilonSchedule& eps, const DampingParams& p, double t) {
  const double margin = ct_bound(p) - eps.inv_sqrt_deriv(t);
  return {margin >= 0.0, margin};
}

double feasible_t1(const EpsilonSchedule& eps, const DampingParams& p) {
  if (eps.kind() != EpsilonKind::kPower) {
    throw Error(ErrorCode::kInvalidArgument, "feasible_t1 needs a power eps schedule");
  }
  const double m = ct_bound(p);
  if (!(m > 0.0)) {
    std::ostringstream msg;
    msg << "growth condition bound min(2 lambda - delta, (delta - (a+1) lambda/a)/2) = " << m
        << " is not positive";
    throw Error(ErrorCode::kInfeasibleParams, msg.str());
  }
  const double r = eps.r();
  const double threshold = std::pow(2.0 * m / r, 2.0 / (r - 2.0));
  return std::max(eps.t0(), threshold);
}

LambdaWindow lambda_window(double delta, double a, double c) {
  LambdaWindow w;
  w.lo = 0.5 * delta;
  w.hi = a * delta / (a + 1.0);
  if (delta > 2.0) {
    const double shifted = delta + 1.0 / c;
    const double lower_root = 0.5 * (shifted + std::sqrt(shifted * shifted - 2.0));
    const double upper_root = 0.5 * (delta + std::sqrt(delta * delta - 4.0));
    w.lo = std::max(w.lo, lower_root);
    w.hi = std::min({w.hi, upper_root, delta});
  }
  w.feasible = w.lo < w.hi;
  return w;
}

WeightedSigmaIntegral gamma_weighted_sigma_integral(const DiffusionSchedule& sigma,
                                                    const ScalarFn& log_gamma, double t1,
                                                    double T, int intervals) {
  if (T < t1) throw Error(ErrorCode::kInvalidArgument, "integration range needs T >= t1");
  if (sigma.is_zero() || T == t1) return {0.0, true};
  auto integrand = [&](double s) {
    const double hs = sigma.hs_norm_sq(s);
    return hs > 0.0 ? std::exp(log_gamma(s) + std::log(hs)) : 0.0;
  };
  WeightedSigmaIntegral out;
  out.value = simpson_log(integrand, t1, T, intervals);
  const double tail_lo = std::max(t1, T / 10.0);
  const double span = std::log(T / t1);
  const int tail_n = std::max(16, static_cast<int>(intervals * std::log(T / tail_lo) / span));
  const double tail = simpson_log(integrand, tail_lo, T, tail_n);
  out.converged = std::isfinite(out.value) &&
                  (out.value == 0.0 || (tail_lo > t1 && std::abs(tail) < 1e-6 * std::abs(out.value)));
  return out;
}

}  // namespace strigs
