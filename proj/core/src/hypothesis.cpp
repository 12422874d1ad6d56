#include "spdelab/hypothesis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spdelab/rng.hpp"

namespace spdelab {

std::string to_string(HypoId id) {
  switch (id) {
    case HypoId::A1: return "A.1";
    case HypoId::A2: return "A.2";
    case HypoId::A3: return "A.3";
    case HypoId::A4: return "A.4";
    case HypoId::B1: return "B.1";
    case HypoId::B3: return "B.3";
    case HypoId::C1: return "C.1";
    case HypoId::C3: return "C.3";
    case HypoId::C4: return "C.4";
  }
  return "?";
}

namespace {

Eigen::VectorXd sample_state(PathRng& rng, int m, double r_max) {
  Eigen::VectorXd g(m);
  rng.fill_gaussian(g, 1.0);
  const double target = r_max * rng.uniform();
  const double n = g.norm();
  if (n > 0.0) g *= target / n;
  return g;
}

double tol_for(const CheckConfig& cfg, double rhs_magnitude) {
  return cfg.tol_abs + cfg.tol_rel * std::abs(rhs_magnitude);
}

/// Running minimum of sample margins with the witness of the worst one.
struct MarginTracker {
  double margin = std::numeric_limits<double>::infinity();
  double tolerance = 0.0;
  Witness witness;

  void offer(double m, double tol, const Witness& w) {
    if (m < margin) {
      margin = m;
      tolerance = tol;
      witness = w;
    }
  }

  void finalize(CheckReport& rep) const {
    rep.margin = margin;
    rep.tolerance = tolerance;
    rep.witness = witness;
    rep.pass = margin >= -tolerance;
  }
};

std::string region_note(const CheckConfig& cfg) {
  return "sampled-region certificate: |u|_H <= " + std::to_string(cfg.r_max);
}

/// Power-2 envelope lifted to exponent p: if |X|^2 <= g (1 + |u|^2) then
/// |X|^p <= (2g)^{p/2}/2 * (1 + |u|^p) by the power-mean inequality.
double lift_envelope(double g2, double p) {
  if (g2 <= 0.0) return 0.0;
  return std::pow(2.0 * g2, 0.5 * p) / 2.0;
}

double monotonicity_margin(const OperatorTriple& op, const GalerkinSpace& space,
                           const StateFunctional& rho, const StateFunctional& eta,
                           double t, const StateVec& u, const StateVec& v,
                           bool with_noise, double* rhs_mag) {
  Eigen::VectorXd w = u.coeffs() - v.coeffs();
  Eigen::VectorXd da = op.eval_A(t, u) - op.eval_A(t, v);
  const double r = rho ? rho(space, u) : 0.0;
  const double e = eta ? eta(space, v) : 0.0;
  double lhs = 2.0 * da.dot(w);
  if (with_noise) {
    Eigen::MatrixXd db = op.eval_B(t, u) - op.eval_B(t, v);
    lhs += db.squaredNorm();
  }
  const double rhs = (op.params.f_A(t) + r + e) * w.squaredNorm();
  if (rhs_mag) *rhs_mag = std::abs(rhs);
  return rhs - lhs;
}

CheckReport monotonicity_check(const OperatorTriple& op, const GalerkinSpace& space,
                               const CheckConfig& cfg, StateFunctional rho,
                               StateFunctional eta, bool with_noise) {
  if (!rho) rho = op.params.rho;
  if (!eta) eta = op.params.eta;
  CheckReport rep;
  rep.id = with_noise ? HypoId::B1 : HypoId::A2;
  rep.n_samples = cfg.n_samples;
  rep.note = region_note(cfg);
  MarginTracker tracker;
  const int m = space.dim();
  for (int i = 0; i < cfg.n_samples; ++i) {
    PathRng rng(cfg.seed, static_cast<std::uint64_t>(i));
    const double t = cfg.horizon * rng.uniform();
    StateVec u(sample_state(rng, m, cfg.r_max));
    StateVec v(sample_state(rng, m, cfg.r_max));
    double rhs_mag = 0.0;
    const double margin =
        monotonicity_margin(op, space, rho, eta, t, u, v, with_noise, &rhs_mag);
    Witness w;
    w.t = t;
    w.u = u.coeffs();
    w.v = v.coeffs();
    tracker.offer(margin, tol_for(cfg, rhs_mag), w);

    // Envelope on the declared witnesses themselves.
    for (const StateVec* s : {&u, &v}) {
      const double rv = rho ? std::abs(rho(space, *s)) : 0.0;
      const double ev = eta ? std::abs(eta(space, *s)) : 0.0;
      const double vb = std::pow(space.v_norm(*s), op.params.beta);
      const double hz = std::pow(space.h_norm(*s), op.params.zeta);
      const double bound = op.params.rho_eta_C * (1.0 + vb) * (1.0 + hz);
      Witness ws;
      ws.t = t;
      ws.u = s->coeffs();
      tracker.offer(bound - (rv + ev), tol_for(cfg, bound), ws);
    }
  }
  tracker.finalize(rep);
  return rep;
}

} // namespace

double dual_norm(const GalerkinSpace& space, const Eigen::VectorXd& dual_coeffs,
                 int max_iters, bool* converged) {
  if (converged) *converged = true;
  const int m = space.dim();
  if (dual_coeffs.norm() == 0.0) return 0.0;

  if (space.alpha() == 2.0) {
    double acc = 0.0;
    for (int j = 1; j <= m; ++j)
      acc += dual_coeffs[j - 1] * dual_coeffs[j - 1] / space.laplace_eigenvalue(j);
    return std::sqrt(acc);
  }

  // Projected gradient ascent of <d, phi> on the discrete unit V-sphere.
  const double alpha = space.alpha();
  const auto& quad = space.quadrature();
  Eigen::VectorXd phi(m);
  for (int j = 1; j <= m; ++j) phi[j - 1] = dual_coeffs[j - 1] / space.laplace_eigenvalue(j);
  if (dual_coeffs.dot(phi) < 0.0) phi = -phi;
  auto vnorm = [&](const Eigen::VectorXd& c) { return space.v_norm(StateVec(c)); };
  {
    const double n0 = vnorm(phi);
    if (!(n0 > 0.0)) return 0.0;
    phi /= n0;
  }
  double val = dual_coeffs.dot(phi);
  double step = 0.5;
  double recent_gain = val;
  int since_gain_reset = 0;
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd du = space.node_derivs(StateVec(phi));
    Eigen::VectorXd gnl(quad.size());
    for (int i = 0; i < quad.size(); ++i)
      gnl[i] = std::pow(std::abs(du[i]), alpha - 2.0) * du[i];
    // Gradient of |phi|_V at a unit-norm point.
    Eigen::VectorXd dV = space.basis_derivatives().transpose() *
                         quad.weights.cwiseProduct(gnl);
    const double dv2 = dV.squaredNorm();
    if (dv2 == 0.0) break;
    Eigen::VectorXd tangent = dual_coeffs - (dual_coeffs.dot(dV) / dv2) * dV;
    Eigen::VectorXd cand = phi + step * tangent;
    const double cn = vnorm(cand);
    if (cn > 0.0) {
      cand /= cn;
      const double cval = dual_coeffs.dot(cand);
      if (cval > val) {
        recent_gain += cval - val;
        phi = cand;
        val = cval;
        step *= 1.2;
      } else {
        step *= 0.5;
      }
    } else {
      step *= 0.5;
    }
    if (++since_gain_reset == 10) {
      if (recent_gain <= 1e-9 * std::max(1.0, val)) {
        if (converged) *converged = true;
        return val;
      }
      recent_gain = 0.0;
      since_gain_reset = 0;
    }
    if (step < 1e-14) return val;
  }
  // Budget exhausted while still improving noticeably.
  if (converged) *converged = (recent_gain <= 1e-6 * std::max(1.0, val));
  return val;
}

CheckReport check_hemicontinuity(const OperatorTriple& op, const GalerkinSpace& space,
                                 const CheckConfig& cfg) {
  if (cfg.n_lambda < 8)
    throw std::invalid_argument("check_hemicontinuity: need n_lambda >= 8");
  CheckReport rep;
  rep.id = HypoId::A1;
  rep.n_samples = cfg.n_samples;
  rep.note = region_note(cfg);
  MarginTracker tracker;
  const int m = space.dim();
  const int nf = 2 * cfg.n_lambda;  // fine intervals on [-1, 1]
  for (int i = 0; i < cfg.n_samples; ++i) {
    PathRng rng(cfg.seed, static_cast<std::uint64_t>(i));
    const double t = cfg.horizon * rng.uniform();
    Eigen::VectorXd u = sample_state(rng, m, cfg.r_max);
    Eigen::VectorXd v = sample_state(rng, m, 0.5 * cfg.r_max);
    Eigen::VectorXd w(m);
    rng.fill_gaussian(w, 1.0);
    if (w.norm() > 0.0) w.normalize();

    Eigen::VectorXd theta(nf + 1);
    for (int j = 0; j <= nf; ++j) {
      const double lam = -1.0 + 2.0 * j / nf;
      theta[j] = op.eval_A(t, StateVec(u + lam * v)).dot(w);
    }
    double d_fine = 0.0, d_coarse = 0.0, lam_worst = -1.0;
    for (int j = 0; j < nf; ++j) {
      const double d = std::abs(theta[j + 1] - theta[j]);
      if (d > d_fine) {
        d_fine = d;
        lam_worst = -1.0 + 2.0 * j / nf;
      }
    }
    for (int j = 0; j + 2 <= nf; j += 2)
      d_coarse = std::max(d_coarse, std::abs(theta[j + 2] - theta[j]));

    const double rhs = d_coarse / 1.5;
    Witness wit;
    wit.t = t;
    wit.u = u;
    wit.v = v;
    wit.w = w;
    wit.lambda = lam_worst;
    tracker.offer(rhs - d_fine, tol_for(cfg, rhs), wit);
  }
  tracker.finalize(rep);
  return rep;
}

CheckReport check_local_monotonicity(const OperatorTriple& op, const GalerkinSpace& space,
                                     const CheckConfig& cfg, StateFunctional rho,
                                     StateFunctional eta) {
  return monotonicity_check(op, space, cfg, std::move(rho), std::move(eta), false);
}

CheckReport check_noise_monotonicity(const OperatorTriple& op, const GalerkinSpace& space,
                                     const CheckConfig& cfg, StateFunctional rho,
                                     StateFunctional eta) {
  return monotonicity_check(op, space, cfg, std::move(rho), std::move(eta), true);
}

CheckReport check_coercivity(const OperatorTriple& op, const GalerkinSpace& space,
                             const CheckConfig& cfg) {
  CheckReport rep;
  rep.id = HypoId::A3;
  rep.n_samples = cfg.n_samples;
  rep.note = region_note(cfg);
  MarginTracker tracker;
  const int m = space.dim();
  for (int i = 0; i < cfg.n_samples; ++i) {
    PathRng rng(cfg.seed, static_cast<std::uint64_t>(i));
    const double t = cfg.horizon * rng.uniform();
    StateVec u(sample_state(rng, m, cfg.r_max));
    const double h2 = u.coeffs().squaredNorm();
    const double vb = std::pow(space.v_norm(u), op.params.beta);
    const double rhs = op.params.f_A(t) * (1.0 + h2) - op.params.C_coerc * vb;
    const double lhs = 2.0 * op.eval_A(t, u).dot(u.coeffs());
    const double rhs_mag = std::abs(op.params.f_A(t)) * (1.0 + h2) + op.params.C_coerc * vb;
    Witness w;
    w.t = t;
    w.u = u.coeffs();
    tracker.offer(rhs - lhs, tol_for(cfg, rhs_mag), w);
  }
  tracker.finalize(rep);
  return rep;
}

GrowthReports check_growth(const OperatorTriple& op, const GalerkinSpace& space,
                           const CheckConfig& cfg, const FeedbackMap* control,
                           const TimeTable* control_f_phi) {
  GrowthReports out;
  out.a4.id = HypoId::A4;
  out.b3.id = HypoId::B3;
  out.c4.id = HypoId::C4;
  for (CheckReport* r : {&out.a4, &out.b3, &out.c4}) {
    r->n_samples = cfg.n_samples;
    r->note = region_note(cfg);
  }
  MarginTracker t_a4, t_b3, t_c4;
  const int m = space.dim();
  const double beta = op.params.beta;
  const double conj = beta / (beta - 1.0);
  const double p = cfg.p_moment;
  const TimeTable& f_phi = control_f_phi ? *control_f_phi : op.params.f_Phi;
  for (int i = 0; i < cfg.n_samples; ++i) {
    PathRng rng(cfg.seed, static_cast<std::uint64_t>(i));
    const double t = cfg.horizon * rng.uniform();
    StateVec u(sample_state(rng, m, cfg.r_max));
    const double h = u.coeffs().norm();
    const double vb = std::pow(space.v_norm(u), beta);
    Witness w;
    w.t = t;
    w.u = u.coeffs();

    bool conv = true;
    const double dn = dual_norm(space, op.eval_A(t, u), cfg.ascent_iters, &conv);
    if (!conv) {
      ++out.a4.indeterminate;
    } else {
      const double rhs = (op.params.f_A(t) + op.params.C_growth * vb) *
                         (1.0 + std::pow(h, op.params.alpha_growth));
      t_a4.offer(rhs - std::pow(dn, conj), tol_for(cfg, rhs), w);
    }

    const double bnorm = op.eval_B(t, u).norm();
    const double rhs_b = lift_envelope(op.params.g_B(t), p) * (1.0 + std::pow(h, p));
    t_b3.offer(rhs_b - std::pow(bnorm, p), tol_for(cfg, rhs_b), w);

    const double phin = control ? (*control)(t, u).norm() : op.eval_Phi(t, u).norm();
    const double rhs_c = lift_envelope(f_phi(t), p) * (1.0 + std::pow(h, p));
    t_c4.offer(rhs_c - std::pow(phin, p), tol_for(cfg, rhs_c), w);
  }
  t_a4.finalize(out.a4);
  t_b3.finalize(out.b3);
  t_c4.finalize(out.c4);
  return out;
}

ControlReports check_control_family(const FeedbackMap& phi, const GalerkinSpace& space,
                                    const CheckConfig& cfg, const ControlDecl& decl) {
  ControlReports out;
  out.c1.id = HypoId::C1;
  out.c3.id = HypoId::C3;
  out.c1.n_samples = cfg.n_samples;
  out.c3.n_samples = cfg.n_samples;
  out.c1.note = region_note(cfg);
  out.c3.note = region_note(cfg);
  MarginTracker t_c1, t_c3;
  double lambda_fit = 0.0, alpha_fit = 0.0;
  const int m = space.dim();
  for (int i = 0; i < cfg.n_samples; ++i) {
    PathRng rng(cfg.seed, static_cast<std::uint64_t>(i));
    const double t = cfg.horizon * rng.uniform();
    const double s = cfg.horizon * rng.uniform();
    Eigen::VectorXd x = sample_state(rng, m, cfg.r_max);
    if (i % 4 == 3) x *= 1e-3;  // stress the bound near the origin
    Eigen::VectorXd dir(m);
    rng.fill_gaussian(dir, 1.0);
    if (dir.norm() > 0.0) dir.normalize();
    const double delta = cfg.r_max * std::pow(10.0, -6.0 * rng.uniform());
    Eigen::VectorXd y = x + delta * dir;

    const Eigen::VectorXd p_tx = phi(t, StateVec(x));
    const Eigen::VectorXd p_ty = phi(t, StateVec(y));
    const Eigen::VectorXd p_sx = phi(s, StateVec(x));
    const Eigen::VectorXd p_sy = phi(s, StateVec(y));

    const double dx2 = (x - y).squaredNorm();
    const double dt2 = (t - s) * (t - s);
    if (dx2 > 0.0) alpha_fit = std::max(alpha_fit, (p_tx - p_ty).squaredNorm() / dx2);
    if (dt2 > 1e-24) lambda_fit = std::max(lambda_fit, (p_tx - p_sx).squaredNorm() / dt2);

    Witness w;
    w.t = t;
    w.s = s;
    w.u = x;
    w.v = y;
    // Quadruple and both slice pairs against the declared constants.
    const double b_quad = decl.lambda_decl * dt2 + decl.alpha_decl * dx2;
    t_c1.offer(b_quad - (p_tx - p_sy).squaredNorm(), tol_for(cfg, b_quad), w);
    const double b_state = decl.alpha_decl * dx2;
    t_c1.offer(b_state - (p_tx - p_ty).squaredNorm(), tol_for(cfg, b_state), w);
    const double b_time = decl.lambda_decl * dt2;
    t_c1.offer(b_time - (p_tx - p_sx).squaredNorm(), tol_for(cfg, b_time), w);

    for (const Eigen::VectorXd* st : {&x, &y}) {
      const double bound = decl.f_phi(t) * (1.0 + st->squaredNorm());
      Witness ws;
      ws.t = t;
      ws.u = *st;
      const Eigen::VectorXd val = (st == &x) ? p_tx : p_ty;
      t_c3.offer(bound - val.squaredNorm(), tol_for(cfg, bound), ws);
    }
  }
  t_c1.finalize(out.c1);
  t_c3.finalize(out.c3);
  out.c1.lambda_fit = lambda_fit;
  out.c1.alpha_fit = alpha_fit;
  return out;
}

std::vector<CheckReport> run_all_checks(const OperatorTriple& op, const GalerkinSpace& space,
                                        const CheckConfig& cfg, const FeedbackMap* control,
                                        const ControlDecl* decl) {
  FeedbackMap zero = [&space](double, const StateVec&) {
    return Eigen::VectorXd::Zero(space.dim()).eval();
  };
  ControlDecl zero_decl;
  const FeedbackMap& ctrl = control ? *control : zero;
  const ControlDecl& d = decl ? *decl : zero_decl;

  std::vector<CheckReport> out;
  out.push_back(check_hemicontinuity(op, space, cfg));
  out.push_back(check_local_monotonicity(op, space, cfg));
  out.push_back(check_coercivity(op, space, cfg));
  GrowthReports g = check_growth(op, space, cfg, &ctrl, &d.f_phi);
  out.push_back(g.a4);
  out.push_back(check_noise_monotonicity(op, space, cfg));
  out.push_back(g.b3);
  ControlReports c = check_control_family(ctrl, space, cfg, d);
  out.push_back(c.c1);
  out.push_back(c.c3);
  out.push_back(g.c4);
  return out;
}

double reevaluate_witness(const OperatorTriple& op, const GalerkinSpace& space,
                          const CheckReport& report, const CheckConfig& cfg,
                          const FeedbackMap* control, const ControlDecl* decl) {
  const Witness& w = report.witness;
  switch (report.id) {
    case HypoId::A1: {
      const int nf = 2 * cfg.n_lambda;
      Eigen::VectorXd theta(nf + 1);
      for (int j = 0; j <= nf; ++j) {
        const double lam = -1.0 + 2.0 * j / nf;
        theta[j] = op.eval_A(w.t, StateVec(w.u + lam * w.v)).dot(w.w);
      }
      double d_fine = 0.0, d_coarse = 0.0;
      for (int j = 0; j < nf; ++j)
        d_fine = std::max(d_fine, std::abs(theta[j + 1] - theta[j]));
      for (int j = 0; j + 2 <= nf; j += 2)
        d_coarse = std::max(d_coarse, std::abs(theta[j + 2] - theta[j]));
      return d_coarse / 1.5 - d_fine;
    }
    case HypoId::A2:
    case HypoId::B1: {
      StateVec u(w.u), v(w.v);
      return monotonicity_margin(op, space, op.params.rho, op.params.eta, w.t, u, v,
                                 report.id == HypoId::B1, nullptr);
    }
    case HypoId::A3: {
      StateVec u(w.u);
      const double h2 = u.coeffs().squaredNorm();
      const double vb = std::pow(space.v_norm(u), op.params.beta);
      return op.params.f_A(w.t) * (1.0 + h2) - op.params.C_coerc * vb -
             2.0 * op.eval_A(w.t, u).dot(u.coeffs());
    }
    case HypoId::A4: {
      StateVec u(w.u);
      const double beta = op.params.beta;
      const double dn = dual_norm(space, op.eval_A(w.t, u), cfg.ascent_iters);
      const double vb = std::pow(space.v_norm(u), beta);
      return (op.params.f_A(w.t) + op.params.C_growth * vb) *
                 (1.0 + std::pow(u.coeffs().norm(), op.params.alpha_growth)) -
             std::pow(dn, beta / (beta - 1.0));
    }
    case HypoId::B3: {
      StateVec u(w.u);
      const double rhs = lift_envelope(op.params.g_B(w.t), cfg.p_moment) *
                         (1.0 + std::pow(u.coeffs().norm(), cfg.p_moment));
      return rhs - std::pow(op.eval_B(w.t, u).norm(), cfg.p_moment);
    }
    case HypoId::C4: {
      StateVec u(w.u);
      const TimeTable& f = decl ? decl->f_phi : op.params.f_Phi;
      const double rhs = lift_envelope(f(w.t), cfg.p_moment) *
                         (1.0 + std::pow(u.coeffs().norm(), cfg.p_moment));
      const double phin = control ? (*control)(w.t, u).norm() : op.eval_Phi(w.t, u).norm();
      return rhs - std::pow(phin, cfg.p_moment);
    }
    case HypoId::C1: {
      if (!control || !decl)
        throw std::invalid_argument("reevaluate_witness: C.1 needs the control and its declaration");
      StateVec x(w.u), y(w.v);
      const double dt2 = (w.t - w.s) * (w.t - w.s);
      const double dx2 = (w.u - w.v).squaredNorm();
      const double bound = decl->lambda_decl * dt2 + decl->alpha_decl * dx2;
      double worst = bound - ((*control)(w.t, x) - (*control)(w.s, y)).squaredNorm();
      worst = std::min(worst, decl->alpha_decl * dx2 -
                                  ((*control)(w.t, x) - (*control)(w.t, y)).squaredNorm());
      worst = std::min(worst, decl->lambda_decl * dt2 -
                                  ((*control)(w.t, x) - (*control)(w.s, x)).squaredNorm());
      return worst;
    }
    case HypoId::C3: {
      if (!control || !decl)
        throw std::invalid_argument("reevaluate_witness: C.3 needs the control and its declaration");
      StateVec x(w.u);
      return decl->f_phi(w.t) * (1.0 + x.coeffs().squaredNorm()) -
             (*control)(w.t, x).squaredNorm();
    }
  }
  throw std::invalid_argument("reevaluate_witness: unknown hypothesis id");
}

} // namespace spdelab
