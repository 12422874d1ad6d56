#include "spdelab/operators.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "spdelab/errors.hpp"

namespace spdelab {

namespace {

int resolve_channels(const GalerkinSpace& space, const NoiseSpec& noise) {
  const int m = space.dim();
  switch (noise.kind) {
    case NoiseKind::none:
      return noise.channels > 0 ? noise.channels : 1;
    case NoiseKind::additive: {
      int k = noise.channels > 0 ? noise.channels : m;
      if (k > m) throw std::invalid_argument("additive noise: channels must not exceed m");
      return k;
    }
    case NoiseKind::multiplicative: {
      int k = noise.channels > 0 ? noise.channels : m;
      if (k != m) throw std::invalid_argument("multiplicative noise: channels must equal m");
      return k;
    }
  }
  throw std::invalid_argument("unknown noise kind");
}

std::function<Eigen::MatrixXd(double, const StateVec&)>
make_noise_map(const GalerkinSpace& space, const NoiseSpec& noise, int k) {
  const int m = space.dim();
  const double sigma = noise.sigma;
  switch (noise.kind) {
    case NoiseKind::none:
      return [m, k](double, const StateVec&) { return Eigen::MatrixXd::Zero(m, k).eval(); };
    case NoiseKind::additive: {
      Eigen::MatrixXd Bmat = Eigen::MatrixXd::Zero(m, k);
      for (int i = 0; i < k; ++i) Bmat(i, i) = sigma;
      return [Bmat](double, const StateVec&) { return Bmat; };
    }
    case NoiseKind::multiplicative:
      return [m, k, sigma](double, const StateVec& u) {
        Eigen::MatrixXd Bmat = Eigen::MatrixXd::Zero(m, k);
        for (int i = 0; i < m; ++i) Bmat(i, i) = sigma * u[i];
        return Bmat;
      };
  }
  throw std::invalid_argument("unknown noise kind");
}

/// Second-order diffusion envelope: Frobenius norm squared of B against
/// g_B (1 + |u|_H^2).
TimeTable noise_g_table(const NoiseSpec& noise, int k) {
  switch (noise.kind) {
    case NoiseKind::none: return TimeTable(0.0);
    case NoiseKind::additive: return TimeTable(noise.sigma * noise.sigma * k);
    case NoiseKind::multiplicative: return TimeTable(noise.sigma * noise.sigma);
  }
  return TimeTable(0.0);
}

void check_noise_sigma(const NoiseSpec& noise) {
  if (noise.kind != NoiseKind::none && !(noise.sigma >= 0.0))
    throw std::invalid_argument("noise sigma must be nonnegative");
}

std::function<Eigen::VectorXd(double, const StateVec&)> zero_phi(int m) {
  return [m](double, const StateVec&) { return Eigen::VectorXd::Zero(m).eval(); };
}

} // namespace

Eigen::VectorXd OperatorTriple::eval_A(double t, const StateVec& u) const {
  Eigen::VectorXd d = A(t, u);
  if (!d.allFinite())
    throw OperatorEvalError(label + ": drift evaluation produced a non-finite value",
                            t, space->h_norm(u));
  return d;
}

Eigen::VectorXd OperatorTriple::eval_Phi(double t, const StateVec& u) const {
  Eigen::VectorXd d = Phi(t, u);
  if (!d.allFinite())
    throw OperatorEvalError(label + ": forcing evaluation produced a non-finite value",
                            t, space->h_norm(u));
  return d;
}

Eigen::MatrixXd OperatorTriple::eval_B(double t, const StateVec& u) const {
  Eigen::MatrixXd b = B(t, u);
  if (!b.allFinite())
    throw OperatorEvalError(label + ": diffusion evaluation produced a non-finite value",
                            t, space->h_norm(u));
  return b;
}

double OperatorTriple::rho_at(const StateVec& u) const {
  return params.rho ? params.rho(*space, u) : 0.0;
}

double OperatorTriple::eta_at(const StateVec& u) const {
  return params.eta ? params.eta(*space, u) : 0.0;
}

OperatorTriple make_heat(SpacePtr space, double nu, NoiseSpec noise) {
  if (!(nu > 0.0)) throw std::invalid_argument("make_heat: need nu > 0");
  if (space->alpha() != 2.0) throw std::invalid_argument("make_heat: space must have alpha = 2");
  check_noise_sigma(noise);
  const int m = space->dim();
  const int k = resolve_channels(*space, noise);

  Eigen::VectorXd lambdas(m);
  for (int j = 1; j <= m; ++j) lambdas[j - 1] = space->laplace_eigenvalue(j);

  OperatorTriple op;
  op.space = space;
  op.label = "heat";
  op.noise_dim = k;
  op.A = [lambdas, nu](double, const StateVec& u) {
    return (-nu * lambdas.cwiseProduct(u.coeffs())).eval();
  };
  op.Phi = zero_phi(m);
  op.B = make_noise_map(*space, noise, k);

  op.params.beta = 2.0;
  op.params.alpha_growth = 0.0;
  op.params.zeta = 0.0;
  op.params.f_A = TimeTable(noise.kind == NoiseKind::multiplicative
                                ? noise.sigma * noise.sigma : 0.0);
  op.params.g_B = noise_g_table(noise, k);
  op.params.f_Phi = TimeTable(0.0);
  op.params.C_coerc = 2.0 * nu;
  op.params.C_growth = nu * nu;
  return op;
}

OperatorTriple make_convection_diffusion(SpacePtr space, double nu, double b,
                                         NoiseSpec noise) {
  if (!(nu > 0.0)) throw std::invalid_argument("make_convection_diffusion: need nu > 0");
  if (space->alpha() != 2.0)
    throw std::invalid_argument("make_convection_diffusion: space must have alpha = 2");
  check_noise_sigma(noise);
  const int m = space->dim();
  const int k = resolve_channels(*space, noise);
  const double L = space->length();

  Eigen::VectorXd lambdas(m);
  for (int j = 1; j <= m; ++j) lambdas[j - 1] = space->laplace_eigenvalue(j);
  // S(j, i) = int e_i' e_j dx: skew, so the transport adds nothing to <A u, u>.
  const Eigen::MatrixXd S = space->basis_values().transpose() *
                            space->quadrature().weights.asDiagonal() *
                            space->basis_derivatives();

  OperatorTriple op;
  op.space = space;
  op.label = "convection_diffusion";
  op.noise_dim = k;
  op.A = [lambdas, S, nu, b](double, const StateVec& u) {
    return (-nu * lambdas.cwiseProduct(u.coeffs()) - b * (S * u.coeffs())).eval();
  };
  op.Phi = zero_phi(m);
  op.B = make_noise_map(*space, noise, k);

  op.params.beta = 2.0;
  op.params.alpha_growth = 0.0;
  op.params.zeta = 0.0;
  op.params.f_A = TimeTable(noise.kind == NoiseKind::multiplicative
                                ? noise.sigma * noise.sigma : 0.0);
  op.params.g_B = noise_g_table(noise, k);
  op.params.f_Phi = TimeTable(0.0);
  op.params.C_coerc = 2.0 * nu;
  // Transport part measured through the Poincare constant L/pi.
  const double cp = L / std::numbers::pi;
  op.params.C_growth = 2.0 * nu * nu + 2.0 * b * b * cp * cp;
  // Valid (loose) nonzero witnesses so the full local-monotonicity form is
  // exercised: the exact inequality already holds with rho = eta = 0.
  const double c_rho = b * b / (4.0 * nu) + 1e-3;
  op.params.rho_eta_C = c_rho;
  op.params.rho = [c_rho](const GalerkinSpace& s, const StateVec& u) {
    double v = s.v_norm(u);
    return c_rho * v * v;
  };
  op.params.eta = op.params.rho;
  return op;
}

OperatorTriple make_quasilinear(SpacePtr space, QuasilinearCoeffs coeffs,
                                HypothesisParams params, NoiseSpec noise,
                                std::string label) {
  if (!coeffs.a1) throw std::invalid_argument("make_quasilinear: a1 coefficient required");
  if (!(params.beta > 1.0)) throw std::invalid_argument("make_quasilinear: beta must exceed 1");
  check_noise_sigma(noise);
  const int k = resolve_channels(*space, noise);

  OperatorTriple op;
  op.space = space;
  op.label = std::move(label);
  op.noise_dim = k;
  const auto a1 = coeffs.a1;
  const auto a0 = coeffs.a0;
  std::string lbl = op.label;
  op.A = [space, a1, a0, lbl](double t, const StateVec& u) {
    const auto& quad = space->quadrature();
    const int n = quad.size();
    Eigen::VectorXd uv = space->node_values(u);
    Eigen::VectorXd du = space->node_derivs(u);
    Eigen::VectorXd w1(n), w0(n);
    bool has_a0 = static_cast<bool>(a0);
    for (int i = 0; i < n; ++i) {
      const double x = quad.nodes[i];
      w1[i] = a1(t, x, uv[i], du[i]);
      w0[i] = has_a0 ? a0(t, x, uv[i], du[i]) : 0.0;
      if (!std::isfinite(w1[i]) || !std::isfinite(w0[i]))
        throw OperatorEvalError(lbl + ": non-finite integrand at node x=" + std::to_string(x),
                                t, u.coeffs().norm());
    }
    Eigen::VectorXd dual = -(space->basis_derivatives().transpose() *
                             quad.weights.cwiseProduct(w1));
    if (has_a0)
      dual -= space->basis_values().transpose() * quad.weights.cwiseProduct(w0);
    return dual;
  };
  op.Phi = zero_phi(space->dim());
  op.B = make_noise_map(*space, noise, k);
  op.params = std::move(params);
  TimeTable gb = noise_g_table(noise, k);
  if (gb.max_value() > op.params.g_B.max_value()) op.params.g_B = gb;
  if (noise.kind == NoiseKind::multiplicative &&
      op.params.f_A.max_value() < noise.sigma * noise.sigma)
    op.params.f_A = TimeTable(noise.sigma * noise.sigma);
  return op;
}

OperatorTriple make_p_laplace(SpacePtr space, NoiseSpec noise) {
  const double alpha = space->alpha();
  QuasilinearCoeffs coeffs;
  coeffs.a1 = [alpha](double, double, double, double z) {
    return std::pow(std::abs(z), alpha - 2.0) * z;
  };
  HypothesisParams params;
  params.beta = alpha;
  params.alpha_growth = 0.0;
  params.zeta = 0.0;
  params.C_coerc = 2.0;
  params.C_growth = 1.0;
  return make_quasilinear(space, std::move(coeffs), std::move(params), noise, "p_laplace");
}

OperatorTriple make_sign_flipped_heat(SpacePtr space, double nu, NoiseSpec noise) {
  OperatorTriple op = make_heat(space, nu, noise);
  auto base = op.A;
  op.A = [base](double t, const StateVec& u) { return (-base(t, u)).eval(); };
  op.label = "sign_flipped_heat";
  return op;
}

OperatorTriple make_step_discontinuous(SpacePtr space) {
  const int m = space->dim();
  OperatorTriple op;
  op.space = space;
  op.label = "step_discontinuous";
  op.noise_dim = 1;
  op.A = [m](double, const StateVec& u) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(m);
    d[0] = (u[0] > 0.0) ? 1.0 : (u[0] < 0.0 ? -1.0 : 0.0);
    return d;
  };
  op.Phi = zero_phi(m);
  op.B = [m](double, const StateVec&) { return Eigen::MatrixXd::Zero(m, 1).eval(); };
  op.params.beta = 2.0;
  op.params.f_A = TimeTable(2.0);
  op.params.C_coerc = 1e-6;
  op.params.C_growth = 1.0;
  op.params.alpha_growth = 0.0;
  return op;
}

} // namespace spdelab
