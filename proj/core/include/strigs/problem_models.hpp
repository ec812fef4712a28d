#pragma once

// Convex objective oracles: f convex, C^1, with L-Lipschitz gradient and a
// nonempty solution set. Where known, the minimum-norm minimizer x* and the
// Tikhonov-regularized minimizer x_eps = argmin f + eps/2 |x|^2 are attached
// in closed form so numeric paths can be checked against them.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>

#include "strigs/types.hpp"

namespace strigs {

class Objective {
 public:
  virtual ~Objective() = default;
  virtual double value(const Vec& x) const = 0;
  // Writes grad f(x) into g; g is resized if needed.
  virtual void gradient(const Vec& x, Vec& g) const = 0;
};

using RegularizedArgmin = std::function<Vec(double eps)>;

// Immutable after construction; copies share the underlying oracle.
class ConvexProblem {
 public:
  ConvexProblem(std::string name, std::shared_ptr<const Objective> objective, int dim,
                double lipschitz, double inf_value, std::optional<Vec> min_norm_minimizer,
                RegularizedArgmin regularized_argmin = {});

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  double lipschitz() const { return lipschitz_; }
  double inf_value() const { return inf_value_; }

  double eval(const Vec& x) const { return objective_->value(x); }
  Vec grad(const Vec& x) const;
  void grad(const Vec& x, Vec& g) const { objective_->gradient(x, g); }

  const std::optional<Vec>& min_norm_minimizer() const { return min_norm_minimizer_; }
  bool has_regularized_argmin() const { return static_cast<bool>(regularized_argmin_); }
  // Throws Error(kInvalidArgument) when no closed form is attached.
  Vec regularized_argmin(double eps) const;

 private:
  std::string name_;
  std::shared_ptr<const Objective> objective_;
  int dim_;
  double lipschitz_;
  double inf_value_;
  std::optional<Vec> min_norm_minimizer_;
  RegularizedArgmin regularized_argmin_;
};

/// f(x) = 1/2 |x - p|^2. L = 1, x* = p, x_eps = p / (1 + eps).
ConvexProblem make_shifted_quadratic(const Vec& p);

/// f(x) = 1/2 |Ax - b|^2 with L = lambda_max(A^T A) and x* = A^+ b.
///
/// A may be rank deficient; the solution set is then an affine subspace and
/// x* is its minimum-norm element. x_eps = (A^T A + eps I)^{-1} A^T b.
ConvexProblem make_least_squares(const Mat& A, const Vec& b);

struct HuberParams {
  double threshold = 1.0;
  Vec center;  // empty means the origin
  int dim = 1;
};

struct LogSumExpParams {
  double smoothing = 1.0;
  Mat anchors;  // one anchor a_j per row; the objective uses both +a_j and -a_j
};

using SmoothedNormParams = std::variant<HuberParams, LogSumExpParams>;

/// Separable Huber: sum_i h(x_i - c_i), h(u) = u^2/2 for |u| <= tau and
/// tau (|u| - tau/2) beyond. L = 1, x* = c. No closed-form x_eps.
///
/// Log-sum-exp over symmetric anchors:
///   f(x) = mu log sum_j (exp(<a_j,x>/mu) + exp(-<a_j,x>/mu)),
/// with L = max_j |a_j|^2 / mu, x* = 0 and inf f = mu log(2m).
ConvexProblem make_smoothed_norm(const SmoothedNormParams& params);

/// f == 0 in dimension dim: every point is a minimizer, x* = 0, L = 0.
ConvexProblem make_zero_problem(int dim);

}  // namespace strigs
