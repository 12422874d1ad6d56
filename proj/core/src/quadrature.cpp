#include "spdelab/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace spdelab {

namespace {

// Legendre polynomial P_n and derivative at x via the three-term recurrence.
std::pair<double, double> legendre_and_deriv(int n, double x) {
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

} // namespace

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need n >= 1");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  if (n == 1) {
    rule.nodes[0] = 0.0;
    rule.weights[0] = 2.0;
    return rule;
  }
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Chebyshev-like initial guess, then Newton.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      auto [p, dp] = legendre_and_deriv(n, x);
      double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    auto [p, dp] = legendre_and_deriv(n, x);
    (void)p;
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.weights[i] = w;
    rule.nodes[n - 1 - i] = x;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[half - 1] = 0.0;
  return rule;
}

QuadratureRule composite_gauss_legendre(double L, int min_points) {
  if (!(L > 0.0)) throw std::invalid_argument("composite_gauss_legendre: need L > 0");
  if (min_points < 1) throw std::invalid_argument("composite_gauss_legendre: need min_points >= 1");
  constexpr int panel_size = 16;
  const int panels = (min_points + panel_size - 1) / panel_size;
  static const QuadratureRule base = gauss_legendre(panel_size);

  QuadratureRule rule;
  const int total = panels * panel_size;
  rule.nodes.resize(total);
  rule.weights.resize(total);
  const double h = L / panels;
  for (int p = 0; p < panels; ++p) {
    const double a = p * h;
    for (int i = 0; i < panel_size; ++i) {
      rule.nodes[p * panel_size + i] = a + 0.5 * h * (base.nodes[i] + 1.0);
      rule.weights[p * panel_size + i] = 0.5 * h * base.weights[i];
    }
  }
  return rule;
}

} // namespace spdelab
