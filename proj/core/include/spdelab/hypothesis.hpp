#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "spdelab/galerkin.hpp"
#include "spdelab/operators.hpp"

namespace spdelab {

/// Inequalities certified by this module. A.x constrain the drift, B.x the
/// diffusion, C.x the feedback control.
enum class HypoId { A1, A2, A3, A4, B1, B3, C1, C3, C4 };

std::string to_string(HypoId id);

/// Worst-case sample of a check, stored with enough context to re-evaluate
/// the inequality standalone.
struct Witness {
  double t = 0.0;
  double s = 0.0;          // second time (C.1 only)
  Eigen::VectorXd u;       // primary state
  Eigen::VectorXd v;       // second state / direction (A.1, A.2, B.1, C.1)
  Eigen::VectorXd w;       // test direction (A.1 only)
  double lambda = 0.0;     // A.1: line coordinate of the worst jump
};

/// Outcome of one hypothesis check over a sampled region: the margin is the
/// minimum signed slack of the inequality (nonnegative = satisfied), and
/// pass = (margin >= -tolerance) with the tolerance evaluated at the worst
/// sample.
struct CheckReport {
  HypoId id = HypoId::A1;
  int n_samples = 0;
  bool pass = false;
  double margin = 0.0;
  double tolerance = 0.0;
  Witness witness;
  int indeterminate = 0;        // dual-norm ascent non-convergences (A.4)
  double lambda_fit = 0.0;      // smallest feasible time coefficient (C.1)
  double alpha_fit = 0.0;       // smallest feasible state coefficient (C.1)
  std::string note;             // sampled-region disclaimer and extras
};

struct CheckConfig {
  int n_samples = 1000;
  double r_max = 10.0;          // states sampled with |u|_H uniform in [0, r_max]
  std::uint64_t seed = 1;
  double tol_abs = 1e-7;
  double tol_rel = 1e-6;        // relative to the inequality's RHS magnitude
  int n_lambda = 64;            // coarse line-grid intervals for hemicontinuity
  double p_moment = 2.0;        // exponent for the B.3 / C.4 power bounds
  double horizon = 1.0;         // times sampled in [0, horizon]
  int ascent_iters = 50;        // dual-norm projected-ascent budget
};

/// Declared control constants verified by check_control_family:
/// |Phi(t,x)-Phi(s,y)|^2 <= lambda_decl |t-s|^2 + alpha_decl |x-y|^2 and
/// |Phi(t,x)|^2 <= f_phi(t)(1 + |x|_H^2).
struct ControlDecl {
  double lambda_decl = 0.0;
  double alpha_decl = 0.0;
  TimeTable f_phi{0.0};
};

using FeedbackMap = std::function<Eigen::VectorXd(double, const StateVec&)>;

/// A.1: lambda -> <A(t, u + lambda v), w> must be continuous. Flags a jump
/// when the maximal adjacent-grid variation fails to shrink by a factor of
/// 1.5 under grid refinement (n_lambda vs 2 n_lambda intervals on [-1, 1]).
CheckReport check_hemicontinuity(const OperatorTriple& op, const GalerkinSpace& space,
                                 const CheckConfig& cfg);

/// A.2: 2<A(t,u) - A(t,v), u - v> <= [f_A(t) + rho(u) + eta(v)] |u-v|_H^2,
/// plus the envelope |rho(u)| + |eta(u)| <= C (1+|u|_V^beta)(1+|u|_H^zeta).
/// Null rho/eta fall back to the operator's declared witnesses.
CheckReport check_local_monotonicity(const OperatorTriple& op, const GalerkinSpace& space,
                                     const CheckConfig& cfg,
                                     StateFunctional rho = nullptr,
                                     StateFunctional eta = nullptr);

/// B.1: same inequality with |B(t,u) - B(t,v)|_F^2 added on the left,
/// checked against the same (rho, eta) pair as A.2.
CheckReport check_noise_monotonicity(const OperatorTriple& op, const GalerkinSpace& space,
                                     const CheckConfig& cfg,
                                     StateFunctional rho = nullptr,
                                     StateFunctional eta = nullptr);

/// A.3: 2<A(t,u), u> <= f_A(t)(1 + |u|_H^2) - C_coerc |u|_V^beta.
CheckReport check_coercivity(const OperatorTriple& op, const GalerkinSpace& space,
                             const CheckConfig& cfg);

struct GrowthReports {
  CheckReport a4;  // |A(t,u)|_{V*}^{beta/(beta-1)} <= (f_A + C_growth |u|_V^beta)(1+|u|_H^alpha)
  CheckReport b3;  // |B(t,u)|_F^p <= envelope(g_B, p)(1 + |u|_H^p)
  CheckReport c4;  // |Phi(t,u)|_H^p <= envelope(f_Phi, p)(1 + |u|_H^p)
};

/// A.4 / B.3 / C.4 on one sample sweep. The dual norm is the exact closed
/// form at alpha = 2 and projected ascent on the discrete V-sphere
/// otherwise; ascent non-convergence marks the sample indeterminate rather
/// than failed. C.4 is evaluated on `control` when supplied (with its
/// envelope), else on the operator's intrinsic forcing.
GrowthReports check_growth(const OperatorTriple& op, const GalerkinSpace& space,
                           const CheckConfig& cfg,
                           const FeedbackMap* control = nullptr,
                           const TimeTable* control_f_phi = nullptr);

struct ControlReports {
  CheckReport c1;  // Lipschitz quadratic bound; fitted (lambda, alpha) reported
  CheckReport c3;  // |Phi(t,x)|^2 <= f_phi(t)(1 + |x|_H^2)
};

/// C.1 / C.3 for one feedback map against its declared constants. The
/// smallest feasible (lambda, alpha) found by ratio maximization over
/// time-slice and state-slice pairs are reported as lambda_fit/alpha_fit.
ControlReports check_control_family(const FeedbackMap& phi, const GalerkinSpace& space,
                                    const CheckConfig& cfg, const ControlDecl& decl);

/// Full sweep in CSV row order: A.1 A.2 A.3 A.4 B.1 B.3 [C.1 C.3] C.4.
/// Control rows use `control`/`decl` when supplied, else the zero map.
std::vector<CheckReport> run_all_checks(const OperatorTriple& op, const GalerkinSpace& space,
                                        const CheckConfig& cfg,
                                        const FeedbackMap* control = nullptr,
                                        const ControlDecl* decl = nullptr);

/// Recompute the margin of a report's stored witness from scratch. Used to
/// confirm that every reported counterexample genuinely violates its
/// inequality (soundness of fail).
double reevaluate_witness(const OperatorTriple& op, const GalerkinSpace& space,
                          const CheckReport& report, const CheckConfig& cfg,
                          const FeedbackMap* control = nullptr,
                          const ControlDecl* decl = nullptr);

/// Dual norm of a functional given by its coefficient vector: exact
/// sqrt(sum d_j^2 / lambda_j) at alpha = 2; projected gradient ascent on
/// the discrete unit V-sphere otherwise. converged reports ascent status.
double dual_norm(const GalerkinSpace& space, const Eigen::VectorXd& dual_coeffs,
                 int max_iters, bool* converged = nullptr);

} // namespace spdelab
