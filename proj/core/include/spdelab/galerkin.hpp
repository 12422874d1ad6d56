#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>

#include "spdelab/quadrature.hpp"

namespace spdelab {

/// Coefficient vector of a state in the spectral basis. Construction
/// rejects non-finite entries, so every StateVec in circulation is finite.
class StateVec {
public:
  explicit StateVec(Eigen::VectorXd coeffs);

  int dim() const { return static_cast<int>(c_.size()); }
  const Eigen::VectorXd& coeffs() const { return c_; }
  double operator[](int i) const { return c_[i]; }

private:
  Eigen::VectorXd c_;
};

/// m-dimensional sine-spectral approximation space on the interval (0, L),
/// with exponent `alpha` > 1 fixing the energy norm
///   |u|_V = (integral of |u'|^alpha)^(1/alpha).
/// Basis functions e_k(x) = sqrt(2/L) sin(k pi x / L) are orthonormal in
/// L^2(0, L), so the L^2 norm of a state equals the Euclidean norm of its
/// coefficients and dual pairings reduce to dot products.
///
/// Immutable once built. All integrals use one fixed composite
/// Gauss-Legendre rule; construction verifies that the rule reproduces
/// basis orthonormality to 1e-8 and refuses to proceed otherwise.
class GalerkinSpace {
public:
  /// quad_points = 0 selects the default (8m); values below 4m are rejected.
  static std::shared_ptr<const GalerkinSpace> build(int m, double alpha,
                                                    double L = 1.0,
                                                    int quad_points = 0);

  int dim() const { return m_; }
  double alpha() const { return alpha_; }
  double length() const { return L_; }
  const QuadratureRule& quadrature() const { return quad_; }

  /// L^2 norm (== Euclidean norm of coefficients).
  double h_norm(const StateVec& u) const { return u.coeffs().norm(); }

  /// Energy norm (integral of |u'|^alpha)^(1/alpha). At alpha = 2 the sine
  /// basis gives the exact Parseval form sqrt(sum lambda_j c_j^2); other
  /// exponents integrate |u'|^alpha by quadrature.
  double v_norm(const StateVec& u) const;

  /// Best L^2 approximation of a scalar function given by its values at
  /// the quadrature nodes.
  StateVec project(const Eigen::VectorXd& node_values) const;
  StateVec project(const std::function<double(double)>& f) const;

  /// Pairing of a dual coefficient vector against a state; with an
  /// orthonormal basis this is the coefficient dot product.
  double dual_pairing(const Eigen::VectorXd& dual_coeffs, const StateVec& u) const {
    return dual_coeffs.dot(u.coeffs());
  }

  /// Values / first derivatives of the state at the quadrature nodes.
  Eigen::VectorXd node_values(const StateVec& u) const { return basis_vals_ * u.coeffs(); }
  Eigen::VectorXd node_derivs(const StateVec& u) const { return basis_derivs_ * u.coeffs(); }

  /// Basis matrices evaluated at the quadrature nodes (n_nodes x m).
  const Eigen::MatrixXd& basis_values() const { return basis_vals_; }
  const Eigen::MatrixXd& basis_derivatives() const { return basis_derivs_; }

  /// Dirichlet eigenvalue of -d^2/dx^2 for mode j (1-based): (j pi / L)^2.
  double laplace_eigenvalue(int j) const;

  /// Worst deviation of the quadrature Gram matrix from the identity,
  /// recorded at construction.
  double orthonormality_defect() const { return ortho_defect_; }

private:
  GalerkinSpace(int m, double alpha, double L, int quad_points);

  int m_;
  double alpha_;
  double L_;
  QuadratureRule quad_;
  Eigen::MatrixXd basis_vals_;
  Eigen::MatrixXd basis_derivs_;
  Eigen::VectorXd lambdas_;
  double ortho_defect_;
};

using SpacePtr = std::shared_ptr<const GalerkinSpace>;

} // namespace spdelab
