#pragma once

#include <Eigen/Dense>

namespace spdelab {

/// Nodes and weights of a quadrature rule on some interval.
struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;

  int size() const { return static_cast<int>(nodes.size()); }

  /// Integrate sampled values f(nodes[i]).
  double integrate(const Eigen::VectorXd& values) const {
    return weights.dot(values);
  }
};

/// n-point Gauss-Legendre rule on [-1, 1]. Exact for polynomials of
/// degree <= 2n-1. Nodes found by Newton iteration on the Legendre
/// recurrence; n must be >= 1.
QuadratureRule gauss_legendre(int n);

/// Composite rule on (0, L) made of 16-point Gauss-Legendre panels.
/// `min_points` requests at least that many nodes; the panel count is
/// ceil(min_points / 16), so the result may hold slightly more.
QuadratureRule composite_gauss_legendre(double L, int min_points);

} // namespace spdelab
