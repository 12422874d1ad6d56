#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <stdexcept>

#include "spdelab/control.hpp"
#include "spdelab/errors.hpp"
#include "spdelab/operators.hpp"
#include "spdelab/rng.hpp"

using namespace spdelab;

namespace {
constexpr double kPi = std::numbers::pi;

StateVec e1(int m, double scale = 1.0) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(m);
  c[0] = scale;
  return StateVec{c};
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) {
    path = (std::filesystem::temp_directory_path() / name).string();
  }
  ~TempFile() { std::remove(path.c_str()); }
};
} // namespace

TEST_SUITE("control") {

TEST_CASE("family dimensions follow the parameterization") {
  FeedbackFamily gain(3, 1, 1.0, Parameterization::gain_only, 2.0);
  CHECK(gain.dim() == 9);
  FeedbackFamily affine(3, 4, 1.0, Parameterization::affine, 2.0);
  CHECK(affine.dim() == 9 + 12);
  CHECK_THROWS_AS(FeedbackFamily(0, 1, 1.0, Parameterization::affine, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(FeedbackFamily(2, 0, 1.0, Parameterization::affine, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(FeedbackFamily(2, 1, -1.0, Parameterization::affine, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(FeedbackFamily(2, 1, 1.0, Parameterization::affine, 0.0),
                  std::invalid_argument);
}

TEST_CASE("pack and unpack are mutually inverse bitwise") {
  FeedbackFamily family(2, 3, 2.0, Parameterization::affine, 1.5);
  ControlParams p;
  p.K.resize(2, 2);
  p.K << 0.1, -0.7, 0.3, 0.9;
  p.c_knots.resize(3, 2);
  p.c_knots << 1.0, -1.0, 0.25, 0.5, 0.0, -0.125;
  p.kappa = 1.5;
  Eigen::VectorXd theta = family.pack(p);
  REQUIRE(theta.size() == family.dim());
  ControlParams q = family.unpack(theta);
  CHECK((q.K - p.K).norm() == 0.0);
  CHECK((q.c_knots - p.c_knots).norm() == 0.0);
  CHECK((family.pack(q) - theta).norm() == 0.0);

  // Size mismatches are contract errors.
  CHECK_THROWS_AS(family.unpack(Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("interior evaluations are exactly -K x - c(t)") {
  FeedbackFamily family(2, 2, 1.0, Parameterization::affine, 100.0);
  ControlParams p;
  p.K.resize(2, 2);
  p.K << 0.5, 0.1, -0.2, 0.4;
  p.c_knots.resize(2, 2);
  p.c_knots << 0.1, 0.2, 0.5, -0.6; // c(0) = (0.1, 0.2), c(1) = (0.5, -0.6)
  p.kappa = 100.0;
  Eigen::VectorXd theta = family.pack(p);
  FeedbackMap phi = family.bind(theta);

  Eigen::VectorXd x(2);
  x << 0.3, -0.8;
  StateVec state{x};
  // At t = 0 and t = 1 the offsets are the knots themselves.
  Eigen::VectorXd at0 = phi(0.0, state);
  CHECK((at0 + p.K * x + p.c_knots.row(0).transpose()).norm() < 1e-15);
  Eigen::VectorXd at1 = phi(1.0, state);
  CHECK((at1 + p.K * x + p.c_knots.row(1).transpose()).norm() < 1e-15);
  // Halfway: linear interpolation of the knots.
  Eigen::VectorXd mid = phi(0.5, state);
  Eigen::VectorXd c_mid = 0.5 * (p.c_knots.row(0) + p.c_knots.row(1)).transpose();
  CHECK((mid + p.K * x + c_mid).norm() < 1e-15);
  // Out-of-range times clamp to the horizon ends.
  CHECK((phi(-1.0, state) - at0).norm() == 0.0);
  CHECK((phi(7.0, state) - at1).norm() == 0.0);
  // evaluate() agrees with the bound map.
  CHECK((family.evaluate(theta, 0.5, state) - mid).norm() == 0.0);
}

TEST_CASE("a single knot means a constant offset") {
  FeedbackFamily family(2, 1, 1.0, Parameterization::affine, 10.0);
  ControlParams p;
  p.K = Eigen::MatrixXd::Zero(2, 2);
  p.c_knots.resize(1, 2);
  p.c_knots << 0.4, -0.2;
  p.kappa = 10.0;
  FeedbackMap phi = family.bind(family.pack(p));
  StateVec x = e1(2, 3.0);
  for (double t : {0.0, 0.37, 1.0})
    CHECK((phi(t, x) + p.c_knots.row(0).transpose()).norm() == 0.0);
}

TEST_CASE("saturation rescales onto the kappa sphere and never beyond") {
  const double kappa = 0.7;
  FeedbackFamily family(3, 1, 1.0, Parameterization::gain_only, kappa);
  Eigen::MatrixXd K = 2.0 * Eigen::MatrixXd::Identity(3, 3);
  ControlParams p;
  p.K = K;
  p.c_knots = Eigen::MatrixXd::Zero(1, 3);
  p.kappa = kappa;
  FeedbackMap phi = family.bind(family.pack(p));

  // A state well inside: |K x| = 2 * 0.1 < kappa, untouched.
  Eigen::VectorXd small_out = phi(0.0, e1(3, 0.1));
  CHECK(small_out.norm() == doctest::Approx(0.2).epsilon(1e-14));
  // A state far outside: output is exactly on the sphere, same direction.
  Eigen::VectorXd big_out = phi(0.0, e1(3, 5.0));
  CHECK(big_out.norm() == doctest::Approx(kappa).epsilon(1e-12));
  CHECK(big_out[0] < 0.0);

  // Property sweep: the bound holds for random states and times.
  PathRng rng(123, 0);
  Eigen::VectorXd g(3);
  for (int i = 0; i < 100000; ++i) {
    rng.fill_gaussian(g, 3.0);
    const double t = rng.uniform();
    CHECK(phi(t, StateVec{g}).norm() <= kappa * (1.0 + 1e-12));
  }
}

TEST_CASE("declared regularity constants cover the family") {
  const double kappa = 2.0;
  FeedbackFamily family(2, 3, 2.0, Parameterization::affine, kappa);
  ControlParams p;
  p.K.resize(2, 2);
  p.K << 0.8, 0.3, 0.0, 0.5;
  p.c_knots.resize(3, 2);
  p.c_knots << 0.5, 0.0, -0.5, 0.25, 0.0, 0.0;
  p.kappa = kappa;
  Eigen::VectorXd theta = family.pack(p);
  ControlDecl decl = family.declared_params(theta);

  // State coefficient: 2 |K|_op^2 via the exact top singular value.
  const double k_op = p.K.jacobiSvd().singularValues()(0);
  CHECK(decl.alpha_decl == doctest::Approx(2.0 * k_op * k_op).epsilon(1e-12));

  // Time coefficient: 2 * (max interpolation slope)^2; knots are 1.0 apart.
  const double slope1 = (p.c_knots.row(1) - p.c_knots.row(0)).norm();
  const double slope2 = (p.c_knots.row(2) - p.c_knots.row(1)).norm();
  const double max_slope = std::max(slope1, slope2);
  CHECK(decl.lambda_decl ==
        doctest::Approx(2.0 * max_slope * max_slope).epsilon(1e-12));

  // Growth envelope: constant, at least kappa^2.
  CHECK(decl.f_phi.max_value() >= kappa * kappa * (1 - 1e-12));

  // The declared constants certify the family for the checker.
  SpacePtr space = GalerkinSpace::build(2, 2.0);
  CheckConfig ccfg;
  ccfg.n_samples = 150;
  ccfg.r_max = 4.0;
  ccfg.seed = 5;
  ccfg.horizon = 2.0;
  FeedbackMap phi = family.bind(theta);
  ControlReports reports = check_control_family(phi, *space, ccfg, decl);
  CHECK(reports.c1.pass);
  CHECK(reports.c3.pass);
}

TEST_CASE("feedback persistence round-trips bitwise") {
  FeedbackFamily family(3, 2, 0.75, Parameterization::affine, 1.25);
  PathRng rng(9, 1);
  Eigen::VectorXd theta(family.dim());
  rng.fill_gaussian(theta, 1.0);
  TempFile file("spdelab_feedback_roundtrip.txt");
  save_feedback(file.path, family, theta);
  LoadedFeedback loaded = load_feedback(file.path);
  CHECK(loaded.family.state_dim() == 3);
  CHECK(loaded.family.n_knots() == 2);
  CHECK(loaded.family.horizon() == 0.75);
  CHECK(loaded.family.parameterization() == Parameterization::affine);
  CHECK(loaded.family.kappa() == 1.25);
  REQUIRE(loaded.theta.size() == theta.size());
  CHECK((loaded.theta - theta).norm() == 0.0);

  CHECK_THROWS_AS(load_feedback("/nonexistent/feedback.txt"), IoError);
  // Truncated files are rejected.
  {
    std::FILE* f = std::fopen(file.path.c_str(), "w");
    std::fputs("spdelab-feedback 1\n3\n", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_feedback(file.path), IoError);
}

TEST_CASE("cost components split exactly and sum to the total") {
  // Deterministic heat decay with a pure terminal cost has a closed form;
  // the quadrature identity j = run_f + run_g + terminal_h is exact.
  SpacePtr space = GalerkinSpace::build(2, 2.0);
  OperatorTriple op = make_heat(space, 1.0);
  SimConfig cfg;
  cfg.T = 0.1;
  cfg.n_steps = 4000;
  cfg.k_noise = 1;
  FeedbackFamily family(2, 1, cfg.T, Parameterization::gain_only, 1e9);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(family.dim());

  CostSpec spec;
  spec.mode = RunningCostMode::tracking;
  spec.q = 0.0;
  spec.r = 1.0;
  spec.q_terminal = 2.0;
  CostEstimate est = estimate_cost(*space, op, family, theta, spec, e1(2), cfg, 3);
  CHECK(est.n_paths == 3);
  CHECK(est.j_total == est.run_f + est.run_g + est.terminal_h);
  CHECK(est.run_f == 0.0);
  CHECK(est.run_g == 0.0); // zero gain: no actuation cost
  const double yT = std::exp(-kPi * kPi * 0.1);
  CHECK(est.terminal_h == doctest::Approx(2.0 * yT * yT).epsilon(1e-3));
  CHECK(est.se == doctest::Approx(0.0)); // identical deterministic paths

  // Running tracking cost against the origin: q int |x|^2 dt with the same
  // closed form.
  CostSpec track;
  track.q = 3.0;
  CostEstimate run = estimate_cost(*space, op, family, theta, track, e1(2), cfg, 2);
  const double exact = 3.0 * (1.0 - std::exp(-2 * kPi * kPi * 0.1)) / (2 * kPi * kPi);
  CHECK(run.j_total == doctest::Approx(exact).epsilon(1e-3));
  CHECK(run.terminal_h == 0.0);
}

TEST_CASE("the priced control is the one applied along the path") {
  // With a nonzero gain the realized actuation integral must match a
  // manual left-endpoint walk along the stored trajectory.
  SpacePtr space = GalerkinSpace::build(2, 2.0);
  NoiseSpec noise{NoiseKind::additive, 0.2, 2};
  OperatorTriple op = make_heat(space, 1.0, noise);
  SimConfig cfg;
  cfg.T = 0.05;
  cfg.n_steps = 50;
  cfg.k_noise = 2;
  cfg.seed = 77;
  FeedbackFamily family(2, 1, cfg.T, Parameterization::gain_only, 100.0);
  ControlParams p;
  p.K = 0.9 * Eigen::MatrixXd::Identity(2, 2);
  p.c_knots = Eigen::MatrixXd::Zero(1, 2);
  p.kappa = 100.0;
  Eigen::VectorXd theta = family.pack(p);

  CostSpec spec;
  spec.q = 0.5;
  spec.r = 2.0;
  spec.q_terminal = 1.0;
  CostEstimate est = estimate_cost(*space, op, family, theta, spec, e1(2), cfg, 1);

  FeedbackMap phi = family.bind(theta);
  SamplePath path = simulate_path(*space, op, phi, e1(2), cfg, 0);
  double run_f = 0.0, run_g = 0.0;
  for (int j = 0; j < cfg.n_steps; ++j) {
    const StateVec xj = path.state_at(j);
    run_f += cfg.dt() * spec.q * xj.coeffs().squaredNorm();
    run_g += cfg.dt() * spec.r * phi(path.times[j], xj).squaredNorm();
  }
  const double term =
      spec.q_terminal * path.states.row(cfg.n_steps).squaredNorm();
  CHECK(est.run_f == doctest::Approx(run_f).epsilon(1e-12));
  CHECK(est.run_g == doctest::Approx(run_g).epsilon(1e-12));
  CHECK(est.terminal_h == doctest::Approx(term).epsilon(1e-12));
  CHECK(est.j_total == est.run_f + est.run_g + est.terminal_h);
}

TEST_CASE("tracking references shift the quadratic targets") {
  SpacePtr space = GalerkinSpace::build(2, 2.0);
  OperatorTriple op = make_heat(space, 1.0);
  SimConfig cfg;
  cfg.T = 0.01;
  cfg.n_steps = 100;
  cfg.k_noise = 1;
  FeedbackFamily family(2, 1, cfg.T, Parameterization::gain_only, 1e9);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(family.dim());
  CostSpec spec;
  spec.q = 1.0;
  spec.q_terminal = 1.0;
  spec.x_ref = e1(2, 1.0).coeffs();
  spec.x_term = e1(2, 1.0).coeffs();
  // Starting exactly at the reference on a short horizon: tiny cost.
  CostEstimate at_ref = estimate_cost(*space, op, family, theta, spec, e1(2), cfg, 1);
  CostSpec origin_spec;
  origin_spec.q = 1.0;
  origin_spec.q_terminal = 1.0;
  CostEstimate at_origin =
      estimate_cost(*space, op, family, theta, origin_spec, e1(2), cfg, 1);
  CHECK(at_ref.j_total < at_origin.j_total);
  CHECK(at_ref.j_total < 0.05);
}

TEST_CASE("the energy-penalty running cost caps at v_cap") {
  SpacePtr space = GalerkinSpace::build(2, 2.0);
  OperatorTriple op = make_heat(space, 1.0);
  SimConfig cfg;
  cfg.T = 0.01;
  cfg.n_steps = 10;
  cfg.k_noise = 1;
  FeedbackFamily family(2, 1, cfg.T, Parameterization::gain_only, 1e9);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(family.dim());
  CostSpec spec;
  spec.mode = RunningCostMode::v_penalty;
  spec.q = 1.0;
  spec.v_cap = 0.5; // far below |e1|_V^2 = pi^2
  CostEstimate capped = estimate_cost(*space, op, family, theta, spec, e1(2), cfg, 1);
  CHECK(capped.run_f == doctest::Approx(cfg.T * 0.5).epsilon(1e-12));
  spec.v_cap = 1e9;
  CostEstimate uncapped = estimate_cost(*space, op, family, theta, spec, e1(2), cfg, 1);
  CHECK(uncapped.run_f > capped.run_f);
  // Left-endpoint sum of the decaying energy: a bit below T |e1|_V^2.
  CHECK(uncapped.run_f == doctest::Approx(cfg.T * kPi * kPi).epsilon(0.10));
  CHECK(uncapped.run_f < cfg.T * kPi * kPi);
}

TEST_CASE("joint pricing folds actuation into the running component") {
  SpacePtr space = GalerkinSpace::build(2, 2.0);
  NoiseSpec noise{NoiseKind::additive, 0.1, 2};
  OperatorTriple op = make_heat(space, 1.0, noise);
  SimConfig cfg;
  cfg.T = 0.02;
  cfg.n_steps = 20;
  cfg.k_noise = 2;
  cfg.seed = 3;
  FeedbackFamily family(2, 1, cfg.T, Parameterization::gain_only, 10.0);
  ControlParams p;
  p.K = 0.5 * Eigen::MatrixXd::Identity(2, 2);
  p.c_knots = Eigen::MatrixXd::Zero(1, 2);
  p.kappa = 10.0;
  Eigen::VectorXd theta = family.pack(p);
  CostSpec split;
  split.q = 1.0;
  split.r = 2.0;
  CostSpec joint = split;
  joint.joint = true;
  CostEstimate a = estimate_cost(*space, op, family, theta, split, e1(2), cfg, 4);
  CostEstimate b = estimate_cost(*space, op, family, theta, joint, e1(2), cfg, 4);
  CHECK(b.j_total == doctest::Approx(a.j_total).epsilon(1e-12));
  CHECK(b.run_g == 0.0);
  CHECK(b.run_f == doctest::Approx(a.run_f + a.run_g).epsilon(1e-12));
}

TEST_CASE("exit fraction counts paths whose energy crosses tau_m") {
  SpacePtr space = GalerkinSpace::build(2, 2.0);
  OperatorTriple op = make_heat(space, 1.0);
  SimConfig cfg;
  cfg.T = 0.01;
  cfg.n_steps = 10;
  cfg.k_noise = 1;
  FeedbackFamily family(2, 1, cfg.T, Parameterization::gain_only, 1e9);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(family.dim());
  CostSpec spec;
  spec.q = 1.0;
  // |e1|_V^2 = pi^2 ~ 9.87: a threshold below that is crossed at t = 0 by
  // every (deterministic) path, one above is never crossed.
  spec.tau_m = 5.0;
  CHECK(estimate_cost(*space, op, family, theta, spec, e1(2), cfg, 3).exit_fraction ==
        doctest::Approx(1.0));
  spec.tau_m = 50.0;
  CHECK(estimate_cost(*space, op, family, theta, spec, e1(2), cfg, 3).exit_fraction ==
        doctest::Approx(0.0));
}

TEST_CASE("cost evaluations share noise across parameter points") {
  SpacePtr space = GalerkinSpace::build(2, 2.0);
  NoiseSpec noise{NoiseKind::additive, 0.3, 2};
  OperatorTriple op = make_heat(space, 1.0, noise);
  SimConfig cfg;
  cfg.T = 0.05;
  cfg.n_steps = 25;
  cfg.k_noise = 2;
  cfg.seed = 11;
  FeedbackFamily family(2, 1, cfg.T, Parameterization::gain_only, 100.0);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(family.dim());
  CostSpec spec;
  spec.q = 1.0;
  CostEstimate first = estimate_cost(*space, op, family, theta, spec, e1(2), cfg, 16);
  CostEstimate again = estimate_cost(*space, op, family, theta, spec, e1(2), cfg, 16);
  CHECK(first.j_total == again.j_total); // bitwise: same streams, same math
  CHECK(first.se == again.se);
}

TEST_CASE("all-divergent costing raises the ensemble error") {
  SpacePtr space = GalerkinSpace::build(2, 2.0);
  OperatorTriple op = make_sign_flipped_heat(space, 1.0);
  SimConfig cfg;
  cfg.T = 4000.0;
  cfg.n_steps = 4000; // dt = 1: mode-1 factor ~ 10.9 per step, overflow < 400 steps
  cfg.k_noise = 1;
  FeedbackFamily family(2, 1, cfg.T, Parameterization::gain_only, 1e9);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(family.dim());
  CostSpec spec;
  spec.q = 1.0;
  CHECK_THROWS_AS(
      estimate_cost(*space, op, family, theta, spec, e1(2), cfg, 3),
      EnsembleError);
}

TEST_CASE("minimize with budget one prices only the starting point") {
  SpacePtr space = GalerkinSpace::build(2, 2.0);
  OperatorTriple op = make_heat(space, 1.0);
  SimConfig cfg;
  cfg.T = 0.01;
  cfg.n_steps = 20;
  cfg.k_noise = 1;
  FeedbackFamily family(2, 1, cfg.T, Parameterization::gain_only, 1e9);
  Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(family.dim());
  CostSpec spec;
  spec.q = 1.0;
  OptimizerConfig opt;
  opt.budget = 1;
  opt.n_paths = 1;
  MinimizeResult res = minimize(*space, op, family, theta0, spec, e1(2), cfg, opt);
  CHECK(res.n_evals == 1);
  REQUIRE(res.history.size() == 1);
  CHECK(res.history[0].accepted);
  CHECK((res.theta_star - theta0).norm() == 0.0);
  CHECK(res.j_star == res.history[0].j_value);

  OptimizerConfig bad = opt;
  bad.budget = 0;
  CHECK_THROWS_AS(minimize(*space, op, family, theta0, spec, e1(2), cfg, bad),
                  std::invalid_argument);
}

TEST_CASE("accepted evaluations are strictly decreasing for every method") {
  SpacePtr space = GalerkinSpace::build(2, 2.0);
  NoiseSpec noise{NoiseKind::additive, 0.05, 2};
  OperatorTriple op = make_heat(space, 1.0, noise);
  SimConfig cfg;
  cfg.T = 0.05;
  cfg.n_steps = 25;
  cfg.k_noise = 2;
  cfg.seed = 21;
  FeedbackFamily family(2, 1, cfg.T, Parameterization::gain_only, 50.0);
  ControlParams p0;
  p0.K = 3.0 * Eigen::MatrixXd::Identity(2, 2); // over-actuated start
  p0.c_knots = Eigen::MatrixXd::Zero(1, 2);
  p0.kappa = 50.0;
  Eigen::VectorXd theta0 = family.pack(p0);
  CostSpec spec;
  spec.q = 1.0;
  spec.r = 0.2;
  spec.q_terminal = 1.0;

  for (OptMethod method :
       {OptMethod::nelder_mead, OptMethod::random_search, OptMethod::spsa}) {
    OptimizerConfig opt;
    opt.method = method;
    opt.budget = 40;
    opt.n_paths = 4;
    opt.seed = 2;
    MinimizeResult res = minimize(*space, op, family, theta0, spec, e1(2), cfg, opt);
    CHECK(res.n_evals <= opt.budget);
    CHECK(static_cast<int>(res.history.size()) == res.n_evals);
    double last_accepted = std::numeric_limits<double>::infinity();
    int n_accepted = 0;
    for (const auto& rec : res.history) {
      if (rec.accepted) {
        CHECK(rec.j_value < last_accepted);
        last_accepted = rec.j_value;
        ++n_accepted;
      }
    }
    CHECK(n_accepted >= 1);
    CHECK(res.j_star == last_accepted);
    // The optimizer must improve on a grossly over-actuated start.
    CHECK(res.j_star < res.history[0].j_value);
  }
}

TEST_CASE("a cost indifferent to actuation keeps theta at zero") {
  // With q = q_T = 0 and pure actuation cost from x0 = 0, theta = 0 is a
  // global minimum with J = 0; no proposal can be strictly better.
  SpacePtr space = GalerkinSpace::build(2, 2.0);
  OperatorTriple op = make_heat(space, 1.0);
  SimConfig cfg;
  cfg.T = 0.01;
  cfg.n_steps = 10;
  cfg.k_noise = 1;
  FeedbackFamily family(2, 1, cfg.T, Parameterization::gain_only, 5.0);
  Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(family.dim());
  CostSpec spec;
  spec.r = 1.0;
  OptimizerConfig opt;
  opt.budget = 25;
  opt.n_paths = 1;
  MinimizeResult res = minimize(*space, op, family, theta0, spec,
                                StateVec{Eigen::VectorXd::Zero(2)}, cfg, opt);
  CHECK(res.j_star == 0.0);
  CHECK((res.theta_star - theta0).norm() == 0.0);
}

TEST_CASE("convergence diagnostics vanish identically at the limit point") {
  SpacePtr space = GalerkinSpace::build(2, 2.0);
  NoiseSpec noise{NoiseKind::additive, 0.1, 2};
  OperatorTriple op = make_heat(space, 1.0, noise);
  SimConfig cfg;
  cfg.T = 0.05;
  cfg.n_steps = 25;
  cfg.k_noise = 2;
  cfg.seed = 17;
  FeedbackFamily family(2, 1, cfg.T, Parameterization::affine, 10.0);
  ControlParams lim;
  lim.K = 0.6 * Eigen::MatrixXd::Identity(2, 2);
  lim.c_knots = Eigen::MatrixXd::Zero(1, 2);
  lim.c_knots(0, 0) = 0.2;
  lim.kappa = 10.0;
  Eigen::VectorXd theta_lim = family.pack(lim);

  std::vector<Eigen::VectorXd> seq{theta_lim};
  auto reports = convergence_diag(*space, op, family, seq, theta_lim, e1(2),
                                  cfg, 8, 64, 3.0);
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].index == 1);
  CHECK(reports[0].ctrl_gap == 0.0);
  CHECK(reports[0].aux_gap == 0.0);
  CHECK(reports[0].direct_gap == 0.0);
}

TEST_CASE("feedback gaps scale exactly linearly while the clamp is inactive") {
  SpacePtr space = GalerkinSpace::build(2, 2.0);
  NoiseSpec noise{NoiseKind::additive, 0.05, 2};
  OperatorTriple op = make_heat(space, 1.0, noise);
  SimConfig cfg;
  cfg.T = 0.05;
  cfg.n_steps = 25;
  cfg.k_noise = 2;
  cfg.seed = 29;
  // kappa large enough that no sampled point saturates: the map is linear
  // in theta, so the control gap of (1 - 2^-n) theta_lim halves each step.
  FeedbackFamily family(2, 1, cfg.T, Parameterization::gain_only, 1e6);
  ControlParams lim;
  lim.K = 0.8 * Eigen::MatrixXd::Identity(2, 2);
  lim.c_knots = Eigen::MatrixXd::Zero(1, 2);
  lim.kappa = 1e6;
  Eigen::VectorXd theta_lim = family.pack(lim);

  std::vector<Eigen::VectorXd> seq;
  for (int n = 1; n <= 4; ++n)
    seq.push_back(((1.0 - std::pow(2.0, -n)) * theta_lim).eval());
  auto reports = convergence_diag(*space, op, family, seq, theta_lim, e1(2),
                                  cfg, 4, 128, 3.0);
  REQUIRE(reports.size() == 4);
  for (int i = 0; i + 1 < 4; ++i) {
    CHECK(reports[i].ctrl_gap > 0.0);
    CHECK(reports[i + 1].ctrl_gap ==
          doctest::Approx(0.5 * reports[i].ctrl_gap).epsilon(1e-9));
    // Trajectory gaps shrink along the sequence as well.
    CHECK(reports[i + 1].aux_gap <= reports[i].aux_gap + 1e-12);
    CHECK(reports[i + 1].direct_gap <= reports[i].direct_gap + 1e-12);
  }
}

} // TEST_SUITE
