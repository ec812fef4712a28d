#include <algorithm>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "strigs/cli/commands.hpp"
#include "strigs/cli/config.hpp"

namespace {

void usage(std::ostream& os) {
  os << "usage: strigs <subcommand> [--config FILE] [--set key=value ...]\n"
     << "subcommands:";
  for (const auto& s : strigs::cli::subcommands()) os << " " << s;
  os << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  using namespace strigs::cli;
  const auto& names = subcommands();
  if (argc < 2) {
    usage(std::cerr);
    return kExitUsage;
  }
  const std::string first = argv[1];
  if (first != "-h" && first != "--help" && first != "--version" &&
      std::find(names.begin(), names.end(), first) == names.end()) {
    std::cerr << "unknown subcommand '" << first << "'\n";
    usage(std::cerr);
    return kExitUsage;
  }

  CLI::App app{"Simulation and verification lab for Tikhonov-regularized inertial dynamics"};
  app.set_version_flag("--version", std::string("strigs ") + kVersion);
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  std::vector<std::string> overrides;
  CommandOptions options;
  for (const auto& name : names) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("-c,--config", config_path, "Config file (key = value lines)");
    sub->add_option("--set", overrides, "Override one key, e.g. --set eps.r=1.5")
        ->take_all()
        ->allow_extra_args(false);
    if (name == "rates") {
      sub->add_flag("--assert", options.assert_rates, "Exit 3 when any rate fit fails");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  RunConfig config;
  try {
    config = load_config(config_path, overrides);
  } catch (const strigs::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return run_command(command, config, options, std::cout, std::cerr);
}
