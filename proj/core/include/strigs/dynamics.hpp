#pragma once

// Drift fields for the Tikhonov-regularized inertial system
//
//   dX = Y dt
//   dY = (-delta sqrt(eps(t)) Y - grad f(X) - eps(t) X) dt + sigma(t) dW
//
// and for the baselines it is compared against, plus Euler-Maruyama
// integration with counter-based Brownian increments.

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "strigs/problem_models.hpp"
#include "strigs/rng.hpp"
#include "strigs/schedules.hpp"

namespace strigs {

struct StrigsParams {
  EpsilonSchedule eps;
  double delta;
};

// Same drift as StrigsParams; the system ignores sigma.
struct TrigsParams {
  EpsilonSchedule eps;
  double delta;
};

// dY = (-(alpha/t) Y - grad f) dt + sigma dW
struct SavdParams {
  double alpha;
};

// x'' + (alpha/t) x' + grad f + eps(t) x = 0 (+ noise)
struct AvdTikhonovParams {
  double alpha;
  EpsilonSchedule eps;
};

// x'' + 2 sqrt(mu) x' + grad f = 0 (+ noise)
struct HeavyBallParams {
  double mu;
};

// dX = -grad f dt + sigma dW (first order, no velocity)
struct SgfParams {};

// dY = (-(alpha/t^q) Y - grad f - (a/t^p) X) dt + sigma dW
struct StrigsGenParams {
  double alpha;
  double q;
  double a;
  double p;
};

using DynamicsParams = std::variant<StrigsParams, TrigsParams, SavdParams, AvdTikhonovParams,
                                    HeavyBallParams, SgfParams, StrigsGenParams>;

enum class SystemKind { kStrigs, kTrigs, kSavd, kAvdTikhonov, kHeavyBall, kSgf, kStrigsGen };

const char* to_string(SystemKind kind);
SystemKind parse_system_kind(const std::string& name);

struct SystemSpec {
  ConvexProblem problem;
  DynamicsParams params;
  DiffusionSchedule sigma;

  SystemKind kind() const;
  bool first_order() const { return kind() == SystemKind::kSgf; }
  /// The Tikhonov schedule of strigs/trigs/avd_tikhonov; nullptr otherwise.
  const EpsilonSchedule* eps() const;
  /// sigma as seen by the dynamics (trigs is always noise-free).
  bool noisy() const;
};

struct SimState {
  double t = 0.0;
  Vec x;
  Vec y;  // empty for first-order systems

  bool finite() const;
};

struct Drift {
  Vec dx;
  Vec dy;
};

Drift drift(const SystemSpec& spec, const SimState& s);
/// Allocation-free variant; dx and dy must already have the state's sizes.
void drift_into(const SystemSpec& spec, const SimState& s, Vec& grad_buf, Vec& dx, Vec& dy);

struct LipschitzWitness {
  double lhs = 0.0;
  double bound = 0.0;
  bool ok = false;
};

/// |drift(z1) - drift(z2)|^2 against max(1 + 3 delta^2 eps, 3 (eps^2 + L^2)) |z1 - z2|^2.
/// strigs/trigs only.
LipschitzWitness drift_lipschitz_witness(const SystemSpec& spec, double t, const Vec& x1,
                                         const Vec& y1, const Vec& x2, const Vec& y2);

enum class Scheme {
  // y' = y + h dy + sigma sqrt(h) xi, then x' = x + h y'. Default.
  kSemiImplicit,
  // x' = x + h y, y' = y + h dy + sigma sqrt(h) xi. Unstable once the damping
  // falls below h * omega^2.
  kExplicit,
};

const char* to_string(Scheme scheme);
Scheme parse_scheme(const std::string& name);

/// One Euler-Maruyama step. `noise` is a standard normal vector; the sqrt(h)
/// scaling is applied here. For sgf the noise enters dX.
/// Throws Error(kNonfiniteState) if the result has a NaN/Inf coordinate.
SimState em_step(const SystemSpec& spec, const SimState& s, double h, const Vec& noise,
                 Scheme scheme = Scheme::kSemiImplicit);

struct Trajectory {
  std::vector<double> grid;
  std::vector<SimState> states;
  std::uint64_t seed = 0;
  bool antithetic = false;
  double step_h = 0.0;
  bool ok = true;
  std::string diagnostic;
};

/// Called before every step with the pre-step state and the Brownian
/// increment dW = sqrt(h) xi used by that step.
using StepObserver = std::function<void(std::int64_t step, const SimState& before, const Vec& dw)>;

struct IntegrateOptions {
  Scheme scheme = Scheme::kSemiImplicit;
  bool antithetic = false;  // use -W instead of W
  StepObserver observer;
};

/// Uniform grid t_k = t_init + k h up to T (the last step is rounded to the
/// grid). States are stored at the grid points nearest to each checkpoint,
/// plus both endpoints. A nonfinite state stops integration; the partial
/// trajectory is returned with ok = false and a diagnostic.
Trajectory integrate(const SystemSpec& spec, const SimState& init, double T, double h,
                     std::uint64_t seed, const std::vector<double>& checkpoints,
                     const IntegrateOptions& options = {});

/// Deterministic classical RK4 (sigma ignored) on the same checkpoint rules.
/// Used as a high-accuracy reference for the discretization checks.
Trajectory integrate_rk4(const SystemSpec& spec, const SimState& init, double T, double h,
                         const std::vector<double>& checkpoints);

/// Grid index nearest to checkpoint time c.
std::int64_t grid_index(double t_init, double h, double c);

/// Log-spaced checkpoints from t_init to T, per_decade per decade, endpoints included.
std::vector<double> log_checkpoints(double t_init, double T, int per_decade);

struct StepSweepReport {
  std::vector<double> h_list;
  std::vector<double> deviations;  // max-norm between consecutive h, size h_list.size()-1
  double order = 0.0;              // slope of log deviation vs log h
  bool converged = false;
  bool nonfinite = false;
};

/// Deterministic (sigma = 0) step refinement. h_list must be descending.
StepSweepReport step_size_sweep(const SystemSpec& spec, const SimState& init, double T,
                                const std::vector<double>& h_list,
                                const std::vector<double>& checkpoints,
                                Scheme scheme = Scheme::kSemiImplicit);

}  // namespace strigs
