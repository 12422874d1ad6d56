#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "spdelab/galerkin.hpp"
#include "spdelab/quadrature.hpp"

using namespace spdelab;

namespace {
constexpr double kPi = std::numbers::pi;

Eigen::VectorXd unit_coeff(int m, int j, double scale = 1.0) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(m);
  c[j] = scale;
  return c;
}
} // namespace

TEST_SUITE("quadrature_galerkin") {

TEST_CASE("gauss_legendre integrates polynomials of degree 2n-1 exactly") {
  // n-point rule: exact for x^k, k <= 2n-1; moments of x^k on [-1,1] are
  // 0 (odd) or 2/(k+1) (even).
  for (int n : {1, 2, 3, 5, 8, 16}) {
    QuadratureRule rule = gauss_legendre(n);
    REQUIRE(rule.size() == n);
    CHECK(rule.weights.sum() == doctest::Approx(2.0).epsilon(1e-14));
    for (int k = 0; k <= 2 * n - 1; ++k) {
      Eigen::VectorXd vals(n);
      for (int i = 0; i < n; ++i) vals[i] = std::pow(rule.nodes[i], k);
      const double exact = (k % 2 == 1) ? 0.0 : 2.0 / (k + 1);
      CHECK(rule.integrate(vals) == doctest::Approx(exact).epsilon(1e-13));
    }
    // x^{2n} must NOT be integrated exactly (sanity that the order claim
    // is tight, not vacuous).
    Eigen::VectorXd vals(n);
    for (int i = 0; i < n; ++i) vals[i] = std::pow(rule.nodes[i], 2 * n);
    CHECK(std::abs(rule.integrate(vals) - 2.0 / (2 * n + 1)) > 1e-12);
  }
}

TEST_CASE("gauss_legendre nodes are symmetric and inside (-1,1)") {
  QuadratureRule rule = gauss_legendre(12);
  for (int i = 0; i < rule.size(); ++i) {
    CHECK(rule.nodes[i] > -1.0);
    CHECK(rule.nodes[i] < 1.0);
    CHECK(rule.nodes[i] ==
          doctest::Approx(-rule.nodes[rule.size() - 1 - i]).epsilon(1e-14));
    CHECK(rule.weights[i] > 0.0);
  }
}

TEST_CASE("composite rule covers (0,L) and integrates sin^2 exactly enough") {
  const double L = 2.5;
  QuadratureRule rule = composite_gauss_legendre(L, 40);
  CHECK(rule.size() >= 40);
  CHECK(rule.size() % 16 == 0);
  for (int i = 0; i < rule.size(); ++i) {
    CHECK(rule.nodes[i] > 0.0);
    CHECK(rule.nodes[i] < L);
  }
  // integral of sin^2(pi x / L) over (0,L) = L/2.
  Eigen::VectorXd vals(rule.size());
  for (int i = 0; i < rule.size(); ++i)
    vals[i] = std::sin(kPi * rule.nodes[i] / L) * std::sin(kPi * rule.nodes[i] / L);
  CHECK(rule.integrate(vals) == doctest::Approx(L / 2).epsilon(1e-12));
}

TEST_CASE("StateVec rejects non-finite coefficients") {
  Eigen::VectorXd ok(2);
  ok << 1.0, -2.0;
  CHECK_NOTHROW(StateVec{ok});
  Eigen::VectorXd bad(2);
  bad << 1.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(StateVec{bad}, std::invalid_argument);
  bad[1] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(StateVec{bad}, std::invalid_argument);
}

TEST_CASE("space construction validates arguments") {
  CHECK_THROWS_AS(GalerkinSpace::build(0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(GalerkinSpace::build(4, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(GalerkinSpace::build(4, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(GalerkinSpace::build(4, 2.0, 0.0), std::invalid_argument);
  // quad_points below 4m is rejected; 0 means "use default".
  CHECK_THROWS_AS(GalerkinSpace::build(4, 2.0, 1.0, 15), std::invalid_argument);
  CHECK_NOTHROW(GalerkinSpace::build(4, 2.0, 1.0, 16));
}

TEST_CASE("basis is orthonormal under the stored quadrature") {
  for (double L : {1.0, 3.0}) {
    SpacePtr space = GalerkinSpace::build(8, 2.0, L);
    CHECK(space->orthonormality_defect() < 1e-9);
    const QuadratureRule& q = space->quadrature();
    const Eigen::MatrixXd& V = space->basis_values();
    Eigen::MatrixXd gram = V.transpose() * q.weights.asDiagonal() * V;
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j)
        CHECK(gram(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-10));
  }
}

TEST_CASE("laplace eigenvalues follow (j pi / L)^2") {
  SpacePtr space = GalerkinSpace::build(6, 2.0, 2.0);
  for (int j = 1; j <= 6; ++j)
    CHECK(space->laplace_eigenvalue(j) ==
          doctest::Approx(j * j * kPi * kPi / 4.0).epsilon(1e-14));
  CHECK_THROWS_AS(space->laplace_eigenvalue(0), std::invalid_argument);
  CHECK_THROWS_AS(space->laplace_eigenvalue(7), std::invalid_argument);
}

TEST_CASE("h_norm is the Euclidean coefficient norm") {
  SpacePtr space = GalerkinSpace::build(5, 2.0);
  Eigen::VectorXd c(5);
  c << 3.0, 0.0, -4.0, 0.0, 0.0;
  CHECK(space->h_norm(StateVec{c}) == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("v_norm at alpha=2 equals the Parseval expression") {
  SpacePtr space = GalerkinSpace::build(6, 2.0, 1.5);
  Eigen::VectorXd c(6);
  c << 0.4, -0.2, 0.0, 0.7, 0.0, -0.1;
  double expected = 0.0;
  for (int j = 0; j < 6; ++j)
    expected += space->laplace_eigenvalue(j + 1) * c[j] * c[j];
  expected = std::sqrt(expected);
  CHECK(space->v_norm(StateVec{c}) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("v_norm at alpha=2 agrees with direct quadrature of |u'|^2") {
  // Property: the Parseval fast path and the quadrature definition are the
  // same functional.
  SpacePtr space = GalerkinSpace::build(7, 2.0);
  const QuadratureRule& q = space->quadrature();
  Eigen::VectorXd c(7);
  c << 1.0, 0.5, -0.3, 0.2, 0.0, 0.1, -0.6;
  StateVec u{c};
  Eigen::VectorXd du = space->node_derivs(u);
  double integral = q.integrate(du.array().square().matrix());
  CHECK(space->v_norm(u) == doctest::Approx(std::sqrt(integral)).epsilon(1e-12));
}

TEST_CASE("v_norm at alpha=4 of the first mode matches the closed form") {
  // |e_1'|^4 integrated over (0,1): e_1' = sqrt(2) pi cos(pi x), and
  // integral of cos^4 = 3/8, so the integral is 4 pi^4 (3/8) = (3/2) pi^4
  // and the norm is (3/2)^(1/4) pi.
  SpacePtr space = GalerkinSpace::build(4, 4.0);
  StateVec e1{unit_coeff(4, 0)};
  const double expected = std::pow(1.5, 0.25) * kPi; // 3.4767437887911794
  CHECK(space->v_norm(e1) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(space->v_norm(e1) == doctest::Approx(3.4767437887911794).epsilon(1e-12));
}

TEST_CASE("v_norm scales homogeneously for every alpha") {
  for (double alpha : {2.0, 3.0, 4.0}) {
    SpacePtr space = GalerkinSpace::build(5, alpha);
    Eigen::VectorXd c(5);
    c << 0.3, -0.1, 0.25, 0.0, 0.05;
    const double base = space->v_norm(StateVec{c});
    CHECK(space->v_norm(StateVec{(3.0 * c).eval()}) ==
          doctest::Approx(3.0 * base).epsilon(1e-12));
  }
}

TEST_CASE("projection of x(L-x) recovers the odd-mode sine coefficients") {
  // On (0,1): <x(1-x), e_k> = 2 sqrt(2) (1 - (-1)^k) / (k pi)^3, zero for
  // even k, and c_3 = c_1 / 27.
  SpacePtr space = GalerkinSpace::build(6, 2.0);
  StateVec u = space->project([](double x) { return x * (1.0 - x); });
  const double c1 = 4.0 * std::sqrt(2.0) / (kPi * kPi * kPi); // 0.18244222961113
  CHECK(u[0] == doctest::Approx(c1).epsilon(1e-12));
  CHECK(u[0] == doctest::Approx(0.18244222961111148).epsilon(1e-12));
  CHECK(u[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(u[2] == doctest::Approx(c1 / 27.0).epsilon(1e-10));
  CHECK(u[3] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(u[4] == doctest::Approx(c1 / 125.0).epsilon(1e-8));
}

TEST_CASE("project(node_values(u)) is the identity on the space") {
  SpacePtr space = GalerkinSpace::build(8, 2.0, 2.0);
  Eigen::VectorXd c(8);
  c << 0.9, -0.4, 0.3, 0.0, -0.2, 0.15, 0.0, 0.05;
  StateVec u{c};
  StateVec back = space->project(space->node_values(u));
  CHECK((back.coeffs() - c).norm() < 1e-11);
}

TEST_CASE("projection is the L2-orthogonal one: residual is node-orthogonal") {
  SpacePtr space = GalerkinSpace::build(4, 2.0);
  auto f = [](double x) { return std::exp(x) * std::sin(3.1 * x); };
  StateVec u = space->project(f);
  const QuadratureRule& q = space->quadrature();
  Eigen::VectorXd fv(q.size());
  for (int i = 0; i < q.size(); ++i) fv[i] = f(q.nodes[i]);
  Eigen::VectorXd resid = fv - space->node_values(u);
  // <resid, e_j> = 0 for every basis function.
  Eigen::VectorXd inner =
      space->basis_values().transpose() * (q.weights.asDiagonal() * resid);
  CHECK(inner.cwiseAbs().maxCoeff() < 1e-10);
}

} // TEST_SUITE
