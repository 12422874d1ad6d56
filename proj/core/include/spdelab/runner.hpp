#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spdelab/config.hpp"
#include "spdelab/control.hpp"
#include "spdelab/hypothesis.hpp"

namespace spdelab {

inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 1;            ///< bad arguments or config
inline constexpr int exit_hypothesis_fail = 2;  ///< a certified check failed
inline constexpr int exit_divergence_cap = 3;   ///< too many divergent paths
inline constexpr int exit_optimizer_fail = 4;   ///< no usable candidate found
inline constexpr int exit_io_error = 5;         ///< could not read/write files

/// Command-line inputs shared by every subcommand.
struct RunOptions {
  std::string config_path;             ///< empty means built-in defaults
  std::vector<std::string> overrides;  ///< repeated --set section.key=value
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
};

/// Execute `check`, `simulate`, `energy`, `optimize`, or `compare`:
/// resolves the config, writes the subcommand's CSV outputs plus
/// manifest.txt under the output directory, prints a human summary to
/// `out`, and returns the process exit code.
int run_command(const std::string& command, const RunOptions& options,
                std::ostream& out, std::ostream& err);

/// Configuration resolution used by run_command, exposed for tests:
/// file (or defaults) -> --set overrides -> flag overrides.
Config resolve_config(const RunOptions& options);

/// Thread count precedence: --threads flag, then SPDELAB_THREADS, then the
/// config value, then 1.
int resolve_threads(const RunOptions& options, const Config& cfg);

// ---- assembly from a validated Config (exposed for tests) ----

SpacePtr make_space(const Config& cfg);
OperatorTriple make_operator(const Config& cfg, SpacePtr space);

/// Interpret a state spec: "zero", "e1", "parabola" (the projected bump
/// x (L - x)), or a comma-separated coefficient list of length m.
Eigen::VectorXd make_state(const std::string& spec, double scale,
                           const GalerkinSpace& space);

SimConfig make_sim_config(const Config& cfg, const OperatorTriple& op);

/// The configured feedback: a loaded or freshly parameterized affine family
/// (configured = true), or the zero map wrapped in a trivial family.
struct ControlSetup {
  bool configured = false;
  FeedbackFamily family;
  Eigen::VectorXd theta;
  FeedbackMap map;
  ControlDecl decl;
};

ControlSetup make_control(const Config& cfg);

CostSpec make_cost_spec(const Config& cfg, const GalerkinSpace& space);

} // namespace spdelab
