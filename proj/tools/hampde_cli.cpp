#include <CLI11.hpp>
#include <iostream>
#include <map>
#include <string>

#include "hampde/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Periodic orbits and Floer curves for Hamiltonian PDE on the circle"};
  app.set_version_flag("--version", std::string(HAMPDE_VERSION));
  app.require_subcommand(1);

  std::string config_path;
  hampde::cli::Flags flags;
  std::string output;
  std::uint64_t seed = 0;

  const std::map<std::string, std::string> about{
      {"diophantine", "admissibility of aT/2pi and the small-divisor table"},
      {"counterexample", "forcing with no periodic solution for a continued-fraction schedule"},
      {"linear-solve", "periodic solution of the linear forced problem"},
      {"solve-periodic", "Newton-Krylov periodic orbit with decay audit and flow round trip"},
      {"floer", "connecting curve from the free to the full problem"},
      {"convergence-study", "periodic solve over a ladder of truncations"},
      {"flow", "integrate the Hamiltonian flow from a random initial field"}};

  for (const auto& name : hampde::cli::commands()) {
    auto* sub = app.add_subcommand(name, about.at(name));
    sub->add_option("--config,-c", config_path, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--jobs,-j", flags.jobs, "worker threads for independent solves")->check(CLI::PositiveNumber);
    sub->add_flag("--trace", flags.trace, "write per-step or per-iteration traces");
    sub->add_option("--output,-o", output, "output directory (overrides OUTPUT_DIR and the config)");
    sub->add_option("--seed", seed, "override the config seed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hampde::cli::usage_error;
  }

  const auto* chosen = app.get_subcommands().front();
  if (!output.empty()) flags.output = output;
  if (chosen->count("--seed") > 0) flags.seed = seed;
  return hampde::cli::run(chosen->get_name(), config_path, flags);
}
