#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "spdelab/runner.hpp"
#include "spdelab/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"spdelab: spectral simulation, hypothesis certification, and "
               "feedback optimization for stochastic evolution equations"};
  app.set_version_flag("--version", spdelab::version_string);
  app.require_subcommand(1);

  spdelab::RunOptions options;
  std::string config_path;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  std::string out_dir;
  int threads = 0;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "INI config file");
    sub->add_option("--set", sets,
                    "Override one config value as section.key=value "
                    "(repeatable)");
    sub->add_option("--seed", seed, "Master RNG seed");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--threads", threads,
                    "Worker threads (overrides SPDELAB_THREADS)");
  };

  CLI::App* check = app.add_subcommand(
      "check", "Certify the operator (and control) inequalities by sampling");
  CLI::App* simulate =
      app.add_subcommand("simulate", "Run a path ensemble and write paths.csv");
  CLI::App* energy = app.add_subcommand(
      "energy", "Estimate moment bounds and time-shift statistics");
  CLI::App* optimize = app.add_subcommand(
      "optimize", "Minimize the configured cost over the feedback family");
  CLI::App* compare = app.add_subcommand(
      "compare", "Closed-loop gaps along a parameter sequence");
  for (CLI::App* sub : {check, simulate, energy, optimize, compare})
    add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : spdelab::exit_usage;
  }

  options.config_path = config_path;
  options.overrides = sets;
  for (const CLI::App* sub : {check, simulate, energy, optimize, compare}) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed")) options.seed = seed;
    if (sub->count("--out")) options.out_dir = out_dir;
    if (sub->count("--threads")) options.threads = threads;
    return spdelab::run_command(sub->get_name(), options, std::cout, std::cerr);
  }
  std::cerr << "no subcommand given\n";
  return spdelab::exit_usage;
}
