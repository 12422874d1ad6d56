#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

#include "spdelab/galerkin.hpp"
#include "spdelab/time_table.hpp"

namespace spdelab {

/// How the diffusion coefficient B depends on the state.
enum class NoiseKind { none, additive, multiplicative };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::none;
  double sigma = 0.0;
  /// Number of noise channels; 0 selects the default (m for additive and
  /// multiplicative, 1 for none). Additive requires channels <= m;
  /// multiplicative requires channels == m.
  int channels = 0;
};

/// State-dependent factor of the local-monotonicity bound.
using StateFunctional = std::function<double(const GalerkinSpace&, const StateVec&)>;

/// Declared structural constants of an operator triple: the exponents,
/// time envelopes, and constants under which the drift/diffusion/control
/// inequalities are asserted. The checker verifies the operator against
/// exactly these declarations.
struct HypothesisParams {
  double beta = 2.0;          // energy-norm exponent, must exceed 1
  double alpha_growth = 0.0;  // H-norm exponent in the drift growth bound
  double zeta = 0.0;          // H-norm exponent in the rho/eta envelope
  TimeTable f_A{0.0};         // drift time envelope (monotonicity/coercivity)
  TimeTable g_B{0.0};         // diffusion growth envelope at second order
  TimeTable f_Phi{0.0};       // control growth envelope at second order
  double C_coerc = 1.0;       // energy-norm coefficient in the coercivity bound
  double C_growth = 1.0;      // energy-norm coefficient in the growth bound
  double rho_eta_C = 0.0;     // C in |rho(u)|+|eta(u)| <= C(1+|u|_V^beta)(1+|u|_H^zeta)
  StateFunctional rho;        // may be null (== 0)
  StateFunctional eta;        // may be null (== 0)
};

/// Drift A (dual coordinates), intrinsic forcing Phi (H coordinates, zero
/// for all built-ins; the run-time feedback control enters separately),
/// and diffusion B (m x k, Frobenius norm realizing the truncated
/// Hilbert-Schmidt norm), with the declared hypothesis constants.
struct OperatorTriple {
  SpacePtr space;
  std::string label;
  int noise_dim = 1;
  HypothesisParams params;
  std::function<Eigen::VectorXd(double, const StateVec&)> A;
  std::function<Eigen::VectorXd(double, const StateVec&)> Phi;
  std::function<Eigen::MatrixXd(double, const StateVec&)> B;

  /// Finite-checked evaluations; non-finite output raises OperatorEvalError
  /// carrying (t, |u|_H).
  Eigen::VectorXd eval_A(double t, const StateVec& u) const;
  Eigen::VectorXd eval_Phi(double t, const StateVec& u) const;
  Eigen::MatrixXd eval_B(double t, const StateVec& u) const;

  double rho_at(const StateVec& u) const;
  double eta_at(const StateVec& u) const;
};

/// Linear heat drift: <A u, e_j> = -nu (j pi / L)^2 u_j. Requires alpha = 2.
OperatorTriple make_heat(SpacePtr space, double nu, NoiseSpec noise = {});

/// Heat plus linear transport: <A u, e_j> = -nu (j pi/L)^2 u_j - b int u' e_j.
/// The transport term is skew (contributes nothing to <A u, u>); nonzero
/// rho/eta witnesses are declared to exercise the full monotonicity form.
OperatorTriple make_convection_diffusion(SpacePtr space, double nu, double b,
                                         NoiseSpec noise = {});

/// Coefficients of a divergence-form quasilinear drift
///   <A(t,u), e_j> = -int [ a1(t,x,u,u') e_j'(x) + a0(t,x,u,u') e_j(x) ] dx.
/// a0 may be null (== 0). Evaluated with the space's quadrature.
struct QuasilinearCoeffs {
  std::function<double(double, double, double, double)> a1;  // (t, x, u, du)
  std::function<double(double, double, double, double)> a0;  // optional
};

OperatorTriple make_quasilinear(SpacePtr space, QuasilinearCoeffs coeffs,
                                HypothesisParams params, NoiseSpec noise = {},
                                std::string label = "quasilinear");

/// Canned quasilinear instance a1(z) = |z|^(alpha-2) z, a0 = 0, with alpha
/// taken from the space. Monotone and coercive with beta = alpha.
OperatorTriple make_p_laplace(SpacePtr space, NoiseSpec noise = {});

/// Deliberately broken drift +nu Lap u (declared with the heat constants):
/// fails coercivity and monotonicity with easy witnesses.
OperatorTriple make_sign_flipped_heat(SpacePtr space, double nu,
                                      NoiseSpec noise = {});

/// Deliberately discontinuous drift <A(u), phi> = sign(u_1) phi_1:
/// fails hemicontinuity with a witness near u_1 = 0.
OperatorTriple make_step_discontinuous(SpacePtr space);

} // namespace spdelab
