#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <vector>

#include "spdelab/galerkin.hpp"
#include "spdelab/hypothesis.hpp"
#include "spdelab/operators.hpp"

namespace spdelab {

enum class Scheme { explicit_em, tamed_em };

/// State caps triggering the recorded exit time: n_h caps the squared
/// H-norm, n_v caps the running energy integral. Zero disables a cap.
struct StopThresholds {
  double n_h = 0.0;
  double n_v = 0.0;
  bool enabled() const { return n_h > 0.0 || n_v > 0.0; }
};

struct SimConfig {
  double T = 1.0;
  int n_steps = 100;
  int k_noise = 1;
  Scheme scheme = Scheme::explicit_em;
  std::uint64_t seed = 0;
  double taming_power = 1.0;
  StopThresholds stop;
  /// Crossing a threshold freezes the state for the rest of the grid
  /// (noise is still drawn and recorded so stream alignment is preserved).
  bool hard_stop = false;
  bool store_noise = false;
  double divergence_cap = 0.01;

  double dt() const { return T / n_steps; }
  void validate(const OperatorTriple& op) const;
};

/// One trajectory on the uniform grid. states row j is the coefficient
/// vector at times[j]; v_beta_running is the left-endpoint running integral
/// of |Y|_V^beta (nondecreasing); tau_exit is the first grid time a stop
/// threshold was crossed, or T.
struct SamplePath {
  Eigen::VectorXd times;
  Eigen::MatrixXd states;
  Eigen::VectorXd v_beta_running;
  double tau_exit = 0.0;
  bool diverged = false;
  double diverged_at = std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXd noise;  // n_steps x k when recorded, else empty

  int n_steps() const { return static_cast<int>(times.size()) - 1; }
  int dim() const { return static_cast<int>(states.cols()); }
  StateVec state_at(int j) const { return StateVec(states.row(j).transpose()); }
  bool has_noise() const { return noise.size() > 0; }
};

struct PathSummary {
  Eigen::VectorXd terminal;
  double sup_h = 0.0;
  double int_v_beta = 0.0;
  double tau_exit = 0.0;
  bool diverged = false;
};

PathSummary summarize(const SamplePath& path);

enum class Storage { full, summary };

/// Monte Carlo carrier: per-path trajectories (full) or summaries, with the
/// seeding metadata needed to reproduce every path bit-exactly.
struct PathEnsemble {
  std::uint64_t master_seed = 0;
  SimConfig cfg;
  Storage storage = Storage::summary;
  Eigen::VectorXd x0;
  std::vector<SamplePath> paths;        // populated when storage == full
  std::vector<PathSummary> summaries;   // always populated

  int n_paths() const { return static_cast<int>(summaries.size()); }
  int divergent_count() const;
};

/// One explicit increment: u' = u + dt [A + Phi + control] + B dW, with the
/// total drift tamed as D / (1 + dt |D|^taming_power) under the tamed
/// scheme. dW carries k_noise N(0, dt) increments. Throws DivergenceError
/// on a non-finite result.
StateVec step(const GalerkinSpace& space, const OperatorTriple& op,
              const FeedbackMap& control, const StateVec& u, double t, double dt,
              const Eigen::VectorXd& dW, Scheme scheme = Scheme::explicit_em,
              double taming_power = 1.0);

/// Full trajectory from x0 under the per-(seed, stream) noise substream.
/// Divergence marks the path (state frozen at the last finite value)
/// rather than throwing.
SamplePath simulate_path(const GalerkinSpace& space, const OperatorTriple& op,
                         const FeedbackMap& control, const StateVec& x0,
                         const SimConfig& cfg, std::uint64_t stream);

/// Same dynamics with externally supplied increments (n_steps x k), for
/// refinement couplings and replays.
SamplePath simulate_path_given_noise(const GalerkinSpace& space, const OperatorTriple& op,
                                     const FeedbackMap& control, const StateVec& x0,
                                     const SimConfig& cfg, const Eigen::MatrixXd& noise);

/// Frozen-input system: the drift A acts on the auxiliary state while the
/// control and the diffusion are evaluated along `frozen`, reusing its
/// recorded Brownian increments. Running `frozen`'s own control reproduces
/// it bit-exactly.
SamplePath simulate_auxiliary(const GalerkinSpace& space, const OperatorTriple& op,
                              const FeedbackMap& control_n, const SamplePath& frozen,
                              const SimConfig& cfg);

/// Independent per-path substreams (stream = path index); deterministic for
/// fixed master seed regardless of n_threads. Throws EnsembleError when the
/// divergent fraction exceeds cfg.divergence_cap.
PathEnsemble run_ensemble(const GalerkinSpace& space, const OperatorTriple& op,
                          const FeedbackMap& control, const StateVec& x0,
                          const SimConfig& cfg, int n_paths,
                          Storage storage = Storage::summary, int n_threads = 1);

/// The all-zero feedback map on an m-dimensional space.
FeedbackMap zero_control(int m);

} // namespace spdelab
