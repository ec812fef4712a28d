#pragma once

// Run configuration: a flat `key = value` text format where values are JSON
// literals (numbers, strings, arrays, true/false/null) and `#` starts a
// comment. Bare words are read as strings. Unknown keys are errors.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "strigs/strigs.hpp"

namespace strigs::cli {

inline constexpr const char* kVersion = "0.1.0";

struct SimSettings {
  double h = 0.01;
  double T = 1e4;
  double t0 = 1.0;
  std::uint64_t seed = 0;
  SystemKind kind = SystemKind::kStrigs;
  Vec x0;
  Vec y0;
  int checkpoints_per_decade = 64;
  Scheme scheme = Scheme::kSemiImplicit;
};

struct ExperimentSettings {
  int n_paths = 64;
  double fit_lo = 1e2;
  double fit_hi = 1e4;
  std::map<Metric, double> slack;
  std::vector<Metric> metrics;
  bool antithetic = false;
  bool martingale = false;
  double savd_alpha = 3.0;
  double hb_mu = 1.0;
  StrigsGenParams gen{};
};

struct RunConfig {
  // Every key with its resolved value, in schema order. Derived defaults are
  // written back, so emitting these values reproduces the run.
  nlohmann::ordered_json values;

  ConvexProblem problem = make_zero_problem(1);
  EpsilonSchedule eps = EpsilonSchedule::power(1.0, 1.0);
  DiffusionSchedule sigma = DiffusionSchedule::zero(1);
  DampingParams damping;  // t1 filled in from feasible_t1
  LambdaWindow window;
  SimSettings sim;
  ExperimentSettings experiment;
  std::string output_dir;
  std::string run_id;

  /// The dynamics selected by sim.kind.
  SystemSpec system() const;
  /// Damping parameters when the selected system carries the energy functional.
  std::optional<DampingParams> energy_damping() const;
  SimState initial_state() const;
  /// Log-spaced checkpoints over [sim.t0, sim.T] with t1 inserted.
  std::vector<double> checkpoints() const;
  EnergyModel energy_model() const;
};

/// Parses config text plus `key=value` overrides (applied after the text).
/// Throws Error(kParse) with the line number for malformed input and
/// Error(kValidation) for values that fail cross-field checks.
RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {},
                       const std::string& origin = "<config>");

/// Reads the file (if any) and calls parse_config.
RunConfig load_config(const std::optional<std::string>& path,
                      const std::vector<std::string>& overrides = {});

/// Resolved config in the input format, headed by version and command comments.
std::string manifest_text(const RunConfig& config, const std::string& command);

/// All recognized keys in schema order.
std::vector<std::string> config_keys();

}  // namespace strigs::cli
