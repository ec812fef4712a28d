#pragma once

// Tikhonov parameter eps(t), diffusion sigma_X(t) and the damping parameter
// bundle together with the growth condition on d/dt (1/sqrt(eps)):
//
//   d/dt (1/sqrt(eps(t))) <= min(2 lambda - delta, (delta - (a+1) lambda / a) / 2)
//
// for all t >= t1, with delta/2 < lambda < delta.

#include <functional>
#include <string>

#include "strigs/quadrature.hpp"
#include "strigs/types.hpp"

namespace strigs {

enum class EpsilonKind { kPower, kCustom };

class EpsilonSchedule {
 public:
  /// eps(t) = t^-r on [t0, inf). Throws Error(kInvalidArgument) unless 0 < r < 2, t0 > 0.
  static EpsilonSchedule power(double r, double t0);

  /// User-supplied pair. The derivative must be analytic; nothing is differentiated
  /// numerically.
  static EpsilonSchedule custom(ScalarFn eval, ScalarFn deriv, double t0);

  EpsilonKind kind() const { return kind_; }
  double r() const { return r_; }  // NaN for custom
  double t0() const { return t0_; }

  double eval(double t) const;
  double deriv(double t) const;
  /// d/dt eps(t)^{-1/2} = -deriv / (2 eval^{3/2}).
  double inv_sqrt_deriv(double t) const;

 private:
  EpsilonSchedule() = default;

  EpsilonKind kind_ = EpsilonKind::kPower;
  double r_ = 0.0;
  double t0_ = 1.0;
  ScalarFn eval_;
  ScalarFn deriv_;
};

enum class DiffusionKind { kZero, kScaledIdentity, kDiagonal };

/// Time-only diffusion sigma_X(t) acting on R^dim.
class DiffusionSchedule {
 public:
  static DiffusionSchedule zero(int dim);
  static DiffusionSchedule scaled_identity(int dim, ScalarFn scale);
  static DiffusionSchedule diagonal(int dim, std::function<Vec(double)> diag);

  DiffusionKind kind() const { return kind_; }
  int dim() const { return dim_; }
  bool is_zero() const { return kind_ == DiffusionKind::kZero; }

  /// Scalar s(t) for scaled_identity; 0 for zero. Throws for diagonal.
  double scale(double t) const;
  /// |sigma(t)|_HS^2 = trace(sigma sigma^*).
  double hs_norm_sq(double t) const;
  Vec apply(double t, const Vec& w) const;
  /// out += sigma(t) w.
  void apply_add(double t, const Vec& w, Vec& out) const;

 private:
  DiffusionSchedule() = default;

  DiffusionKind kind_ = DiffusionKind::kZero;
  int dim_ = 0;
  ScalarFn scale_;
  std::function<Vec(double)> diag_;
};

/// sigma(t) = exp(-t^{1 - r/2 + alpha}) Id. Throws unless alpha > 0 and 0 < r < 2.
DiffusionSchedule exp_diffusion(double r, double alpha, int dim);

/// sigma(t) = scale * t^{-power} Id.
DiffusionSchedule power_diffusion(double scale, double power, int dim);

struct DampingParams {
  double delta = 2.0;
  double lambda = 1.25;
  double a = 3.0;
  double c = 4.0;
  double rho = 0.4;
  double t1 = 1.0;

  /// Throws Error(kValidation) naming the first violated inequality among
  /// delta > 0, a > 1, c > 2, delta/2 < lambda < delta, lambda < a delta/(a+1),
  /// 0 < rho < delta/(a+1).
  void validate() const;
};

/// min(2 lambda - delta, (delta - (a+1) lambda / a) / 2).
double ct_bound(const DampingParams& p);

struct CtCheck {
  bool satisfied = false;
  double margin = 0.0;
};

CtCheck check_condition_ct(const EpsilonSchedule& eps, const DampingParams& p, double t);

/// Smallest t1 >= t0 from which the condition holds for all later t. Power
/// schedules only: t1 = max(t0, (2m/r)^{2/(r-2)}).
double feasible_t1(const EpsilonSchedule& eps, const DampingParams& p);

struct LambdaWindow {
  double lo = 0.0;
  double hi = 0.0;
  bool feasible = false;
};

/// Admissible open interval for lambda. For delta > 2 the extra root bounds
/// are intersected as stated; the result is often empty and is reported so.
LambdaWindow lambda_window(double delta, double a, double c);

struct WeightedSigmaIntegral {
  double value = 0.0;
  bool converged = false;  // last decade contributes < 1e-6 of the total
};

/// int_{t1}^{T} gamma(s) |sigma(s)|_HS^2 ds with gamma given through its log
/// (gamma overflows doubles long before the product does).
WeightedSigmaIntegral gamma_weighted_sigma_integral(const DiffusionSchedule& sigma,
                                                    const ScalarFn& log_gamma, double t1,
                                                    double T, int intervals = 4096);

}  // namespace strigs
