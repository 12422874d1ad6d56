#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spdelab/control.hpp"
#include "spdelab/operators.hpp"
#include "spdelab/sde.hpp"

namespace spdelab {

struct SpaceConfig {
  double length = 1.0;
  int m = 8;
  double alpha = 2.0;
  int quad_points = 0;  ///< 0 means the builder default (8 m)
};

struct OperatorConfig {
  std::string name = "heat";  ///< heat | convection_diffusion | p_laplace |
                              ///< sign_flipped_heat | step_discontinuous
  double nu = 1.0;
  double b = 1.0;
  NoiseKind noise = NoiseKind::none;
  double sigma = 0.0;
  int channels = 0;   ///< 0 means the factory default for the noise kind
  double beta = 0.0;  ///< 0 means the operator's own exponent
};

struct ControlConfig {
  std::string family = "zero";  ///< zero | affine
  double kappa = 1.0;
  int n_knots = 1;
  double gain_scale = 0.0;  ///< initial gain = gain_scale * identity
  std::string load;         ///< optional parameter file overriding the above
};

struct SimSection {
  double horizon = 1.0;
  int n_steps = 100;
  int k_noise = 0;  ///< 0 means match the operator's noise dimension
  Scheme scheme = Scheme::explicit_em;
  double taming_power = 1.0;
  std::string x0 = "zero";  ///< zero | e1 | parabola | comma-separated coefficients
  double x0_scale = 1.0;
  double stop_nh = 0.0;
  double stop_nv = 0.0;
  bool hard_stop = false;
  bool store_noise = false;
  double divergence_cap = 0.01;
  Storage store = Storage::full;
};

struct CostSection {
  RunningCostMode mode = RunningCostMode::tracking;
  double q = 0.0;
  double r = 0.0;
  double q_terminal = 0.0;
  double v_cap = 1e6;
  bool joint = false;
  std::string x_ref = "zero";
  std::string x_term = "zero";
  double tau_m = 0.0;
};

struct RunSection {
  int n_paths = 100;
  std::vector<double> p_list{2.0};
  std::vector<double> delta_list;
  OptMethod method = OptMethod::nelder_mead;
  int budget = 100;
  int opt_n_paths = 32;
  double opt_init_step = 0.5;
  int n_seq = 8;
  int ctrl_points = 256;
  int check_samples = 1000;
  double r_max = 10.0;
  double c_p = 0.0;  ///< 0 means no declared moment-bound constant
  int threads = 0;   ///< 0 means unset (resolved by the CLI layer)
};

struct Config {
  std::uint64_t seed = 12345;
  std::string output_dir = "out";
  SpaceConfig space;
  OperatorConfig op;
  ControlConfig control;
  SimSection sim;
  CostSection cost;
  RunSection run;
};

/// One key/value occurrence with its source position (0/0 for overrides).
struct RawEntry {
  std::string section;  ///< empty for top-level keys
  std::string key;
  std::string value;
  int line = 0;
  int col = 0;
};

/// Order-preserving parse product; later duplicates of a key win.
struct RawConfig {
  std::vector<RawEntry> entries;
  /// Replace the last occurrence of section.key, or append a new entry.
  void set(const std::string& section, const std::string& key,
           const std::string& value);
};

/// Lex INI text: [section] headers, key = value lines, blank lines, and
/// full-line comments starting with '#' or ';'. Malformed lines raise
/// ConfigError carrying line and column.
RawConfig parse_ini(const std::string& text);

/// Apply one "--set section.key=value" override (top-level keys use the bare
/// key without a dot).
void apply_override(RawConfig& raw, const std::string& assignment);

/// Type-check and range-check every entry against the schema; unknown
/// sections or keys are hard errors naming the offender.
Config validate_config(const RawConfig& raw);

/// Read and validate a config file. Missing file raises IoError.
Config load_config_file(const std::string& path);

/// Canonical text form listing every field; validate(parse(serialize(c)))
/// reproduces c exactly.
std::string serialize_config(const Config& cfg);

} // namespace spdelab
