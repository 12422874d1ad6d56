#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "spdelab/galerkin.hpp"
#include "spdelab/hypothesis.hpp"
#include "spdelab/operators.hpp"
#include "spdelab/sde.hpp"

namespace spdelab {

enum class Parameterization { gain_only, affine };

/// Concrete coefficients of one saturated affine feedback law.
struct ControlParams {
  Eigen::MatrixXd K;        ///< m x m gain
  Eigen::MatrixXd c_knots;  ///< n_knots x m offset values at uniform time knots
  double kappa = 1.0;       ///< saturation radius in the H norm
};

/// Parametric family of feedback laws u(t, x) = clamp_kappa(-K x - c(t)),
/// where c interpolates linearly between uniformly spaced knots on [0, T]
/// (one knot means a constant offset) and clamp rescales any vector whose
/// H norm exceeds kappa back onto the radius-kappa sphere.
class FeedbackFamily {
 public:
  FeedbackFamily(int m, int n_knots, double horizon, Parameterization param,
                 double kappa);

  int state_dim() const { return m_; }
  int n_knots() const { return n_knots_; }
  double horizon() const { return horizon_; }
  double kappa() const { return kappa_; }
  Parameterization parameterization() const { return param_; }

  /// Number of free parameters: m^2, plus n_knots*m for the affine form.
  int dim() const;

  Eigen::VectorXd pack(const ControlParams& p) const;
  ControlParams unpack(const Eigen::VectorXd& theta) const;

  /// Instantiate the feedback map for one parameter vector.
  FeedbackMap bind(const Eigen::VectorXd& theta) const;

  /// Evaluate without binding (used by gap diagnostics).
  Eigen::VectorXd evaluate(const Eigen::VectorXd& theta, double t,
                           const StateVec& x) const;

  /// Regularity constants guaranteed by construction: squared-distance
  /// growth rates lambda (time) and alpha (state), and a constant bound
  /// envelope. Valid for every theta because the clamp is 1-Lipschitz.
  ControlDecl declared_params(const Eigen::VectorXd& theta) const;

 private:
  int m_;
  int n_knots_;
  double horizon_;
  Parameterization param_;
  double kappa_;
};

struct LoadedFeedback {
  FeedbackFamily family;
  Eigen::VectorXd theta;
};

/// Plain-text persistence for a family + parameter vector; numbers are
/// written in shortest round-trip form so load(save(x)) == x bitwise.
void save_feedback(const std::string& path, const FeedbackFamily& family,
                   const Eigen::VectorXd& theta);
LoadedFeedback load_feedback(const std::string& path);

enum class RunningCostMode { tracking, v_penalty };

/// Cost functional: integral of f(t,x) + g(u) plus a terminal term.
///   tracking:  f = q * ||x - x_ref||_H^2
///   v_penalty: f = q * min(||x||_V^2, v_cap)
///   g = r * ||u||_H^2,   h = q_T * ||x(T) - x_T||_H^2
/// `joint` folds g into the reported running-state component.
struct CostSpec {
  RunningCostMode mode = RunningCostMode::tracking;
  double q = 0.0;
  double r = 0.0;
  double q_terminal = 0.0;
  double v_cap = 1e6;
  bool joint = false;
  Eigen::VectorXd x_ref;  ///< empty means the origin
  Eigen::VectorXd x_term; ///< empty means the origin
  double tau_m = 0.0;     ///< threshold for the exit-fraction diagnostic; 0 disables
};

struct CostEstimate {
  double j_total = 0.0;  ///< equals run_f + run_g + terminal_h exactly
  double se = 0.0;
  int n_paths = 0;
  double run_f = 0.0;
  double run_g = 0.0;
  double terminal_h = 0.0;
  double exit_fraction = 0.0;  ///< fraction with sup_t ||x||_V^2 >= tau_m
  int divergent = 0;
};

/// Monte-Carlo cost of one parameter point. Path p always uses RNG stream p
/// under cfg.seed, so two calls with different theta share their noise.
/// Running sums use left endpoints; the control applied over a step is the
/// one priced for it. Divergent paths are excluded from the averages but
/// counted, and exceeding cfg.divergence_cap raises EnsembleError.
CostEstimate estimate_cost(const GalerkinSpace& space, const OperatorTriple& op,
                           const FeedbackFamily& family, const Eigen::VectorXd& theta,
                           const CostSpec& spec, const StateVec& x0,
                           const SimConfig& cfg, int n_paths);

enum class OptMethod { nelder_mead, random_search, spsa };

struct OptimizerConfig {
  OptMethod method = OptMethod::nelder_mead;
  int budget = 100;      ///< total cost evaluations allowed
  std::uint64_t seed = 0;
  int n_paths = 32;      ///< paths per cost evaluation
  double init_step = 0.5;
};

struct EvalRecord {
  int iteration = 0;
  double j_value = 0.0;
  double se = 0.0;
  bool accepted = false;  ///< strictly below the best value seen so far
  double theta_norm = 0.0;
};

struct MinimizeResult {
  Eigen::VectorXd theta_star;
  double j_star = 0.0;
  double se_star = 0.0;
  std::vector<EvalRecord> history;  ///< one record per cost evaluation
  int n_evals = 0;
  int restarts = 0;
};

/// Direct minimization over the family by the chosen derivative-free method.
/// The starting point is evaluated first and forms the first accepted record
/// (so budget = 1 just prices theta0). Acceptance is strict descent of the
/// incumbent under common random numbers; the accepted subsequence of
/// history is therefore strictly decreasing.
MinimizeResult minimize(const GalerkinSpace& space, const OperatorTriple& op,
                        const FeedbackFamily& family, const Eigen::VectorXd& theta0,
                        const CostSpec& spec, const StateVec& x0,
                        const SimConfig& cfg, const OptimizerConfig& opt);

struct GapReport {
  int index = 0;          ///< position in the parameter sequence (1-based)
  double ctrl_gap = 0.0;  ///< max feedback difference over a fixed sample set
  double aux_gap = 0.0;   ///< E[sup_t ||frozen-input state - limit state||_H^2]
  double aux_se = 0.0;
  double direct_gap = 0.0;  ///< same comparison for fully coupled dynamics
  double direct_se = 0.0;
};

/// Stability of the closed loop along a parameter sequence approaching
/// theta_lim: feedback-map gaps on a fixed (t, x) sample cloud, gaps of the
/// frozen-input system driven along the limit trajectories, and gaps of
/// direct simulations sharing the same noise streams.
std::vector<GapReport> convergence_diag(const GalerkinSpace& space,
                                        const OperatorTriple& op,
                                        const FeedbackFamily& family,
                                        const std::vector<Eigen::VectorXd>& theta_seq,
                                        const Eigen::VectorXd& theta_lim,
                                        const StateVec& x0, const SimConfig& cfg,
                                        int n_paths, int n_ctrl_points,
                                        double sample_radius = 5.0);

} // namespace spdelab
