#include "spdelab/galerkin.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace spdelab {

StateVec::StateVec(Eigen::VectorXd coeffs) : c_(std::move(coeffs)) {
  if (c_.size() == 0) throw std::invalid_argument("StateVec: empty coefficient vector");
  if (!c_.allFinite()) throw std::invalid_argument("StateVec: non-finite coefficient");
}

std::shared_ptr<const GalerkinSpace> GalerkinSpace::build(int m, double alpha,
                                                          double L, int quad_points) {
  return std::shared_ptr<const GalerkinSpace>(new GalerkinSpace(m, alpha, L, quad_points));
}

GalerkinSpace::GalerkinSpace(int m, double alpha, double L, int quad_points)
    : m_(m), alpha_(alpha), L_(L) {
  if (m < 1) throw std::invalid_argument("GalerkinSpace: need m >= 1");
  if (!(alpha > 1.0)) throw std::invalid_argument("GalerkinSpace: need alpha > 1");
  if (!(L > 0.0)) throw std::invalid_argument("GalerkinSpace: need L > 0");
  if (quad_points == 0) quad_points = 8 * m;
  if (quad_points < 4 * m)
    throw std::invalid_argument("GalerkinSpace: quadrature must have at least 4m points");

  quad_ = composite_gauss_legendre(L, quad_points);
  const int n = quad_.size();
  basis_vals_.resize(n, m_);
  basis_derivs_.resize(n, m_);
  lambdas_.resize(m_);
  const double scale = std::sqrt(2.0 / L_);
  for (int k = 1; k <= m_; ++k) {
    const double omega = k * std::numbers::pi / L_;
    lambdas_[k - 1] = omega * omega;
    for (int i = 0; i < n; ++i) {
      const double x = quad_.nodes[i];
      basis_vals_(i, k - 1) = scale * std::sin(omega * x);
      basis_derivs_(i, k - 1) = scale * omega * std::cos(omega * x);
    }
  }

  // The rule must reproduce the basis Gram matrix as the identity;
  // otherwise every downstream integral would silently carry bias.
  Eigen::MatrixXd gram = basis_vals_.transpose() * quad_.weights.asDiagonal() * basis_vals_;
  gram -= Eigen::MatrixXd::Identity(m_, m_);
  ortho_defect_ = gram.cwiseAbs().maxCoeff();
  if (!(ortho_defect_ <= 1e-8))
    throw std::invalid_argument("GalerkinSpace: quadrature fails orthonormality check");
}

double GalerkinSpace::v_norm(const StateVec& u) const {
  if (u.dim() != m_) throw std::invalid_argument("v_norm: dimension mismatch");
  if (alpha_ == 2.0) {
    // Exact: derivatives of the sine basis are L^2-orthogonal with
    // squared norms lambda_j.
    return std::sqrt(lambdas_.cwiseProduct(u.coeffs()).dot(u.coeffs()));
  }
  Eigen::VectorXd du = node_derivs(u);
  double acc = 0.0;
  for (int i = 0; i < quad_.size(); ++i)
    acc += quad_.weights[i] * std::pow(std::abs(du[i]), alpha_);
  return std::pow(acc, 1.0 / alpha_);
}

StateVec GalerkinSpace::project(const Eigen::VectorXd& node_values) const {
  if (node_values.size() != quad_.nodes.size())
    throw std::invalid_argument("project: need one value per quadrature node");
  Eigen::VectorXd c = basis_vals_.transpose() * (quad_.weights.cwiseProduct(node_values));
  return StateVec(std::move(c));
}

StateVec GalerkinSpace::project(const std::function<double(double)>& f) const {
  Eigen::VectorXd vals(quad_.size());
  for (int i = 0; i < quad_.size(); ++i) vals[i] = f(quad_.nodes[i]);
  return project(vals);
}

double GalerkinSpace::laplace_eigenvalue(int j) const {
  if (j < 1 || j > m_) throw std::invalid_argument("laplace_eigenvalue: mode out of range");
  const double w = j * std::numbers::pi / L_;
  return w * w;
}

} // namespace spdelab
