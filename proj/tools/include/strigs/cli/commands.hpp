#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "strigs/cli/config.hpp"

namespace strigs::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitAcceptance = 3;
inline constexpr int kExitUsage = 64;

const std::vector<std::string>& subcommands();

struct CommandOptions {
  bool assert_rates = false;  // rates: exit 3 when any fit fails
};

/// Runs one subcommand and writes its CSV outputs plus manifest.cfg under
/// output_dir/run_id (check-params prints to `out` only). Returns the exit code.
int run_command(const std::string& name, const RunConfig& config, const CommandOptions& options,
                std::ostream& out, std::ostream& err);

}  // namespace strigs::cli
