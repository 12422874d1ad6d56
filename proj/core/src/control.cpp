#include "spdelab/control.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "spdelab/csv.hpp"
#include "spdelab/errors.hpp"
#include "spdelab/rng.hpp"

namespace spdelab {

namespace {

double operator_norm(const Eigen::MatrixXd& K) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K.transpose() * K);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

Eigen::VectorXd clamp_to_ball(Eigen::VectorXd y, double kappa) {
  const double n = y.norm();
  if (n > kappa) y *= kappa / n;
  return y;
}

Eigen::VectorXd offset_at(const Eigen::MatrixXd& c_knots, double horizon, double t) {
  const int k = static_cast<int>(c_knots.rows());
  if (k == 1) return c_knots.row(0);
  const double s = std::clamp(t, 0.0, horizon) * (k - 1) / horizon;
  const int i = std::min(static_cast<int>(s), k - 2);
  const double w = s - i;
  return ((1.0 - w) * c_knots.row(i) + w * c_knots.row(i + 1)).transpose();
}

} // namespace

FeedbackFamily::FeedbackFamily(int m, int n_knots, double horizon,
                               Parameterization param, double kappa)
    : m_(m), n_knots_(n_knots), horizon_(horizon), param_(param), kappa_(kappa) {
  if (m < 1) throw std::invalid_argument("FeedbackFamily: need m >= 1");
  if (n_knots < 1) throw std::invalid_argument("FeedbackFamily: need n_knots >= 1");
  if (!(horizon > 0.0)) throw std::invalid_argument("FeedbackFamily: need horizon > 0");
  if (!(kappa > 0.0) || !std::isfinite(kappa))
    throw std::invalid_argument("FeedbackFamily: need finite kappa > 0");
}

int FeedbackFamily::dim() const {
  return param_ == Parameterization::gain_only ? m_ * m_ : m_ * m_ + n_knots_ * m_;
}

Eigen::VectorXd FeedbackFamily::pack(const ControlParams& p) const {
  if (p.K.rows() != m_ || p.K.cols() != m_)
    throw std::invalid_argument("pack: gain must be m x m");
  Eigen::VectorXd theta(dim());
  int idx = 0;
  for (int i = 0; i < m_; ++i)
    for (int j = 0; j < m_; ++j) theta[idx++] = p.K(i, j);
  if (param_ == Parameterization::affine) {
    if (p.c_knots.rows() != n_knots_ || p.c_knots.cols() != m_)
      throw std::invalid_argument("pack: offsets must be n_knots x m");
    for (int i = 0; i < n_knots_; ++i)
      for (int j = 0; j < m_; ++j) theta[idx++] = p.c_knots(i, j);
  }
  return theta;
}

ControlParams FeedbackFamily::unpack(const Eigen::VectorXd& theta) const {
  if (theta.size() != dim())
    throw std::invalid_argument("unpack: parameter vector has wrong length");
  if (!theta.allFinite())
    throw std::invalid_argument("unpack: parameter vector has non-finite entries");
  ControlParams p;
  p.kappa = kappa_;
  p.K.resize(m_, m_);
  int idx = 0;
  for (int i = 0; i < m_; ++i)
    for (int j = 0; j < m_; ++j) p.K(i, j) = theta[idx++];
  if (param_ == Parameterization::affine) {
    p.c_knots.resize(n_knots_, m_);
    for (int i = 0; i < n_knots_; ++i)
      for (int j = 0; j < m_; ++j) p.c_knots(i, j) = theta[idx++];
  } else {
    p.c_knots = Eigen::MatrixXd::Zero(n_knots_, m_);
  }
  return p;
}

FeedbackMap FeedbackFamily::bind(const Eigen::VectorXd& theta) const {
  ControlParams p = unpack(theta);
  const double horizon = horizon_;
  const double kappa = kappa_;
  return [K = std::move(p.K), c = std::move(p.c_knots), horizon,
          kappa](double t, const StateVec& x) {
    Eigen::VectorXd y = -(K * x.coeffs()) - offset_at(c, horizon, t);
    return clamp_to_ball(std::move(y), kappa);
  };
}

Eigen::VectorXd FeedbackFamily::evaluate(const Eigen::VectorXd& theta, double t,
                                         const StateVec& x) const {
  const ControlParams p = unpack(theta);
  Eigen::VectorXd y = -(p.K * x.coeffs()) - offset_at(p.c_knots, horizon_, t);
  return clamp_to_ball(std::move(y), kappa_);
}

ControlDecl FeedbackFamily::declared_params(const Eigen::VectorXd& theta) const {
  const ControlParams p = unpack(theta);
  const double k_op = operator_norm(p.K);
  double max_slope = 0.0;
  if (n_knots_ > 1) {
    const double dt_knot = horizon_ / (n_knots_ - 1);
    for (int i = 0; i + 1 < n_knots_; ++i)
      max_slope = std::max(
          max_slope, (p.c_knots.row(i + 1) - p.c_knots.row(i)).norm() / dt_knot);
  }
  ControlDecl decl;
  decl.lambda_decl = 2.0 * max_slope * max_slope;
  decl.alpha_decl = 2.0 * k_op * k_op;
  decl.f_phi = TimeTable(std::max(kappa_ * kappa_, 2.0 * k_op));
  return decl;
}

void save_feedback(const std::string& path, const FeedbackFamily& family,
                   const Eigen::VectorXd& theta) {
  if (theta.size() != family.dim())
    throw std::invalid_argument("save_feedback: parameter vector has wrong length");
  std::ofstream os(path);
  if (!os) throw IoError("save_feedback: cannot open " + path);
  os << "spdelab-feedback 1\n";
  os << "m " << family.state_dim() << '\n';
  os << "n_knots " << family.n_knots() << '\n';
  os << "horizon " << format_double(family.horizon()) << '\n';
  os << "parameterization "
     << (family.parameterization() == Parameterization::gain_only ? "gain_only"
                                                                  : "affine")
     << '\n';
  os << "kappa " << format_double(family.kappa()) << '\n';
  os << "theta";
  for (int i = 0; i < theta.size(); ++i) os << ' ' << format_double(theta[i]);
  os << '\n';
  if (!os) throw IoError("save_feedback: write failed for " + path);
}

LoadedFeedback load_feedback(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("load_feedback: cannot open " + path);
  std::string magic;
  int version = 0;
  is >> magic >> version;
  if (!is || magic != "spdelab-feedback" || version != 1)
    throw IoError("load_feedback: " + path + " is not a feedback parameter file");
  int m = 0, n_knots = 0;
  double horizon = 0.0, kappa = 0.0;
  std::string key, param_name;
  auto expect = [&](const char* want) {
    is >> key;
    if (!is || key != want)
      throw IoError(std::string("load_feedback: expected field '") + want + "' in " + path);
  };
  expect("m");
  is >> m;
  expect("n_knots");
  is >> n_knots;
  expect("horizon");
  is >> horizon;
  expect("parameterization");
  is >> param_name;
  expect("kappa");
  is >> kappa;
  if (!is) throw IoError("load_feedback: truncated header in " + path);
  Parameterization param;
  if (param_name == "gain_only")
    param = Parameterization::gain_only;
  else if (param_name == "affine")
    param = Parameterization::affine;
  else
    throw IoError("load_feedback: unknown parameterization '" + param_name + "'");
  FeedbackFamily family(m, n_knots, horizon, param, kappa);
  expect("theta");
  Eigen::VectorXd theta(family.dim());
  for (int i = 0; i < theta.size(); ++i) is >> theta[i];
  if (!is) throw IoError("load_feedback: truncated parameter vector in " + path);
  return {family, std::move(theta)};
}

CostEstimate estimate_cost(const GalerkinSpace& space, const OperatorTriple& op,
                           const FeedbackFamily& family, const Eigen::VectorXd& theta,
                           const CostSpec& spec, const StateVec& x0,
                           const SimConfig& cfg, int n_paths) {
  if (n_paths < 1) throw std::invalid_argument("estimate_cost: need n_paths >= 1");
  if (family.state_dim() != space.dim())
    throw std::invalid_argument("estimate_cost: family and space dimensions differ");
  const int m = space.dim();
  Eigen::VectorXd x_ref = spec.x_ref.size() ? spec.x_ref : Eigen::VectorXd::Zero(m);
  Eigen::VectorXd x_term = spec.x_term.size() ? spec.x_term : Eigen::VectorXd::Zero(m);
  if (x_ref.size() != m || x_term.size() != m)
    throw std::invalid_argument("estimate_cost: reference states have wrong dimension");

  const FeedbackMap control = family.bind(theta);
  SimConfig sim_cfg = cfg;
  sim_cfg.store_noise = false;
  const double dt = sim_cfg.dt();
  const int n = sim_cfg.n_steps;
  const bool need_v = spec.mode == RunningCostMode::v_penalty || spec.tau_m > 0.0;

  std::vector<double> totals;
  totals.reserve(n_paths);
  double sum_f = 0.0, sum_g = 0.0, sum_h = 0.0;
  int divergent = 0, exits = 0;

  for (int p = 0; p < n_paths; ++p) {
    SamplePath path = simulate_path(space, op, control, x0, sim_cfg,
                                    static_cast<std::uint64_t>(p));
    if (path.diverged) {
      ++divergent;
      continue;
    }
    double pf = 0.0, pg = 0.0;
    double sup_v2 = 0.0;
    for (int j = 0; j < n; ++j) {
      const double t = path.times[j];
      const StateVec x(path.state_at(j));
      double v2 = 0.0;
      if (need_v) {
        const double vn = space.v_norm(x);
        v2 = vn * vn;
        sup_v2 = std::max(sup_v2, v2);
      }
      double f = 0.0;
      if (spec.mode == RunningCostMode::tracking)
        f = spec.q * (x.coeffs() - x_ref).squaredNorm();
      else
        f = spec.q * std::min(v2, spec.v_cap);
      const Eigen::VectorXd u = control(t, x);
      const double g = spec.r * u.squaredNorm();
      if (spec.joint) {
        pf += dt * (f + g);
      } else {
        pf += dt * f;
        pg += dt * g;
      }
    }
    if (need_v) {
      const double vn = space.v_norm(StateVec(path.state_at(n)));
      sup_v2 = std::max(sup_v2, vn * vn);
    }
    const double ph =
        spec.q_terminal * (path.states.row(n).transpose() - x_term).squaredNorm();
    sum_f += pf;
    sum_g += pg;
    sum_h += ph;
    totals.push_back(pf + pg + ph);
    if (spec.tau_m > 0.0 && sup_v2 >= spec.tau_m) ++exits;
  }

  const int kept = static_cast<int>(totals.size());
  if (kept == 0)
    throw EnsembleError("estimate_cost: every path diverged", divergent, n_paths);
  if (static_cast<double>(divergent) > sim_cfg.divergence_cap * n_paths)
    throw EnsembleError("estimate_cost: divergent fraction exceeds the cap",
                        divergent, n_paths);

  CostEstimate out;
  out.n_paths = kept;
  out.divergent = divergent;
  out.run_f = sum_f / kept;
  out.run_g = sum_g / kept;
  out.terminal_h = sum_h / kept;
  out.j_total = out.run_f + out.run_g + out.terminal_h;
  double mean = 0.0;
  for (double v : totals) mean += v;
  mean /= kept;
  double var = 0.0;
  for (double v : totals) var += (v - mean) * (v - mean);
  var = kept > 1 ? var / (kept - 1.0) : 0.0;
  out.se = std::sqrt(var / kept);
  out.exit_fraction = spec.tau_m > 0.0 ? static_cast<double>(exits) / kept : 0.0;
  return out;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Incumbent {
  Eigen::VectorXd theta;
  double j = kInf;
  double se = 0.0;
};

/// Shared evaluation harness: prices theta, appends the history record, and
/// advances the incumbent on strict descent.
struct EvalHarness {
  const GalerkinSpace& space;
  const OperatorTriple& op;
  const FeedbackFamily& family;
  const CostSpec& spec;
  const StateVec& x0;
  const SimConfig& cfg;
  const OptimizerConfig& opt;
  MinimizeResult& result;
  Incumbent best;

  bool exhausted() const { return result.n_evals >= opt.budget; }

  double run(const Eigen::VectorXd& theta) {
    double j = kInf, se = 0.0;
    try {
      const CostEstimate ce =
          estimate_cost(space, op, family, theta, spec, x0, cfg, opt.n_paths);
      j = ce.j_total;
      se = ce.se;
    } catch (const EnsembleError&) {
      j = kInf;
    }
    const bool accepted = std::isfinite(j) && j < best.j;
    if (accepted) best = {theta, j, se};
    EvalRecord rec;
    rec.iteration = result.n_evals;
    rec.j_value = j;
    rec.se = se;
    rec.accepted = accepted;
    rec.theta_norm = theta.norm();
    result.history.push_back(rec);
    ++result.n_evals;
    return j;
  }
};

void run_nelder_mead(EvalHarness& h, const Eigen::VectorXd& theta0) {
  const int d = static_cast<int>(theta0.size());
  struct Vertex {
    Eigen::VectorXd x;
    double j;
  };
  std::vector<Vertex> simplex;
  simplex.push_back({theta0, h.best.j});

  auto build_around = [&](const Eigen::VectorXd& center, double scale) {
    simplex.clear();
    simplex.push_back({center, h.run(center)});
    for (int i = 0; i < d && !h.exhausted(); ++i) {
      Eigen::VectorXd v = center;
      v[i] += scale;
      simplex.push_back({v, h.run(v)});
    }
  };

  for (int i = 0; i < d && !h.exhausted(); ++i) {
    Eigen::VectorXd v = theta0;
    v[i] += h.opt.init_step;
    simplex.push_back({v, h.run(v)});
  }

  while (!h.exhausted() && static_cast<int>(simplex.size()) == d + 1) {
    std::sort(simplex.begin(), simplex.end(),
              [](const Vertex& a, const Vertex& b) { return a.j < b.j; });
    double spread = 0.0;
    for (const auto& v : simplex)
      spread = std::max(spread, (v.x - simplex[0].x).norm());
    if (spread < 1e-10 * (1.0 + simplex[0].x.norm())) {
      ++h.result.restarts;
      const double scale =
          h.opt.init_step * std::pow(0.5, h.result.restarts);
      build_around(h.best.theta, scale);
      continue;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < d; ++i) centroid += simplex[i].x;
    centroid /= d;
    Vertex& worst = simplex[d];
    const double j_best = simplex[0].j;
    const double j_second = simplex[d - 1].j;

    const Eigen::VectorXd xr = centroid + (centroid - worst.x);
    const double jr = h.run(xr);
    if (h.exhausted() && jr >= j_second) break;
    if (jr < j_best) {
      if (!h.exhausted()) {
        const Eigen::VectorXd xe = centroid + 2.0 * (centroid - worst.x);
        const double je = h.run(xe);
        if (je < jr) {
          worst = {xe, je};
          continue;
        }
      }
      worst = {xr, jr};
    } else if (jr < j_second) {
      worst = {xr, jr};
    } else {
      if (h.exhausted()) break;
      const bool outside = jr < worst.j;
      const Eigen::VectorXd xk =
          outside ? (centroid + 0.5 * (xr - centroid)).eval()
                  : (centroid - 0.5 * (centroid - worst.x)).eval();
      const double jk = h.run(xk);
      const double ref = outside ? jr : worst.j;
      if (jk <= ref) {
        worst = {xk, jk};
      } else {
        for (int i = 1; i <= d && !h.exhausted(); ++i) {
          simplex[i].x = simplex[0].x + 0.5 * (simplex[i].x - simplex[0].x);
          simplex[i].j = h.run(simplex[i].x);
        }
      }
    }
  }
}

void run_random_search(EvalHarness& h, const Eigen::VectorXd& theta0) {
  const int d = static_cast<int>(theta0.size());
  PathRng rng(h.opt.seed, 0x52414e44u);
  double radius = h.opt.init_step;
  int rejects = 0;
  Eigen::VectorXd proposal(d);
  while (!h.exhausted()) {
    rng.fill_gaussian(proposal, radius);
    const Eigen::VectorXd candidate = h.best.theta + proposal;
    const double j_before = h.best.j;
    const double j = h.run(candidate);
    if (std::isfinite(j) && j < j_before) {
      rejects = 0;
    } else if (++rejects >= 20) {
      radius *= 0.5;
      rejects = 0;
    }
  }
}

void run_spsa(EvalHarness& h, const Eigen::VectorXd& theta0) {
  const int d = static_cast<int>(theta0.size());
  PathRng rng(h.opt.seed, 0x53505341u);
  Eigen::VectorXd theta = theta0;
  const double stability = std::max(1.0, 0.1 * h.opt.budget);
  const double a0 = h.opt.init_step;
  const double c0 = std::max(1e-3, 0.1 * h.opt.init_step);
  Eigen::VectorXd delta(d);
  for (int k = 0; !h.exhausted(); ++k) {
    const double ak = a0 / std::pow(k + 1 + stability, 0.602);
    const double ck = c0 / std::pow(k + 1, 0.101);
    for (int i = 0; i < d; ++i) delta[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const double j_plus = h.run(theta + ck * delta);
    if (h.exhausted()) break;
    const double j_minus = h.run(theta - ck * delta);
    if (!std::isfinite(j_plus) || !std::isfinite(j_minus)) continue;
    if (h.exhausted()) break;
    const Eigen::VectorXd grad = ((j_plus - j_minus) / (2.0 * ck)) * delta;
    const Eigen::VectorXd candidate = theta - ak * grad;
    const double j_cand = h.run(candidate);
    if (std::isfinite(j_cand)) theta = candidate;
  }
}

} // namespace

MinimizeResult minimize(const GalerkinSpace& space, const OperatorTriple& op,
                        const FeedbackFamily& family, const Eigen::VectorXd& theta0,
                        const CostSpec& spec, const StateVec& x0,
                        const SimConfig& cfg, const OptimizerConfig& opt) {
  if (opt.budget < 1) throw std::invalid_argument("minimize: need budget >= 1");
  if (theta0.size() != family.dim())
    throw std::invalid_argument("minimize: theta0 has wrong length");
  MinimizeResult result;
  EvalHarness h{space, op, family, spec, x0, cfg, opt, result, {}};

  const double j0 = h.run(theta0);
  if (!std::isfinite(j0))
    throw OptimizationError("minimize: the starting point cannot be priced "
                            "(its paths diverge)");

  switch (opt.method) {
    case OptMethod::nelder_mead:
      run_nelder_mead(h, theta0);
      break;
    case OptMethod::random_search:
      run_random_search(h, theta0);
      break;
    case OptMethod::spsa:
      run_spsa(h, theta0);
      break;
  }

  if (!std::isfinite(h.best.j))
    throw OptimizationError("minimize: no parameter point could be priced");
  result.theta_star = h.best.theta;
  result.j_star = h.best.j;
  result.se_star = h.best.se;
  return result;
}

std::vector<GapReport> convergence_diag(const GalerkinSpace& space,
                                        const OperatorTriple& op,
                                        const FeedbackFamily& family,
                                        const std::vector<Eigen::VectorXd>& theta_seq,
                                        const Eigen::VectorXd& theta_lim,
                                        const StateVec& x0, const SimConfig& cfg,
                                        int n_paths, int n_ctrl_points,
                                        double sample_radius) {
  if (n_paths < 1) throw std::invalid_argument("convergence_diag: need n_paths >= 1");
  if (n_ctrl_points < 1)
    throw std::invalid_argument("convergence_diag: need n_ctrl_points >= 1");
  const int m = space.dim();

  const FeedbackMap phi_lim = family.bind(theta_lim);
  SimConfig frozen_cfg = cfg;
  frozen_cfg.store_noise = true;
  std::vector<std::pair<int, SamplePath>> frozen;  // (stream index, limit path)
  frozen.reserve(n_paths);
  for (int p = 0; p < n_paths; ++p) {
    SamplePath path = simulate_path(space, op, phi_lim, x0, frozen_cfg,
                                    static_cast<std::uint64_t>(p));
    if (!path.diverged) frozen.emplace_back(p, std::move(path));
  }
  if (frozen.empty())
    throw EnsembleError("convergence_diag: every limit path diverged", n_paths,
                        n_paths);

  PathRng cloud_rng(cfg.seed, 0x434c4f55u);
  std::vector<double> cloud_t(n_ctrl_points);
  Eigen::MatrixXd cloud_x(n_ctrl_points, m);
  Eigen::VectorXd g(m);
  for (int i = 0; i < n_ctrl_points; ++i) {
    cloud_t[i] = cfg.T * cloud_rng.uniform();
    cloud_rng.fill_gaussian(g, 1.0);
    const double norm = g.norm();
    const double target = sample_radius * cloud_rng.uniform();
    if (norm > 0.0)
      cloud_x.row(i) = (g * (target / norm)).transpose();
    else
      cloud_x.row(i).setZero();
  }

  auto mean_se = [](const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double v : xs) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : xs) var += (v - mean) * (v - mean);
    var = xs.size() > 1 ? var / (n - 1.0) : 0.0;
    return std::pair<double, double>{mean, std::sqrt(var / n)};
  };

  std::vector<GapReport> reports;
  reports.reserve(theta_seq.size());
  for (std::size_t s = 0; s < theta_seq.size(); ++s) {
    const Eigen::VectorXd& theta_n = theta_seq[s];
    GapReport rep;
    rep.index = static_cast<int>(s) + 1;

    for (int i = 0; i < n_ctrl_points; ++i) {
      const StateVec x(cloud_x.row(i).transpose());
      const double diff = (family.evaluate(theta_n, cloud_t[i], x) -
                           family.evaluate(theta_lim, cloud_t[i], x))
                              .norm();
      rep.ctrl_gap = std::max(rep.ctrl_gap, diff);
    }

    const FeedbackMap phi_n = family.bind(theta_n);
    std::vector<double> aux_gaps, direct_gaps;
    aux_gaps.reserve(frozen.size());
    direct_gaps.reserve(frozen.size());
    for (const auto& [stream, lim_path] : frozen) {
      const SamplePath aux =
          simulate_auxiliary(space, op, phi_n, lim_path, frozen_cfg);
      double sup2 = 0.0;
      for (int j = 0; j <= cfg.n_steps; ++j)
        sup2 = std::max(sup2,
                        (aux.states.row(j) - lim_path.states.row(j)).squaredNorm());
      aux_gaps.push_back(sup2);

      SamplePath direct = simulate_path(space, op, phi_n, x0, frozen_cfg,
                                        static_cast<std::uint64_t>(stream));
      if (direct.diverged) continue;
      double dsup2 = 0.0;
      for (int j = 0; j <= cfg.n_steps; ++j)
        dsup2 = std::max(
            dsup2, (direct.states.row(j) - lim_path.states.row(j)).squaredNorm());
      direct_gaps.push_back(dsup2);
    }
    if (!aux_gaps.empty()) {
      const auto [mean, se] = mean_se(aux_gaps);
      rep.aux_gap = mean;
      rep.aux_se = se;
    }
    if (!direct_gaps.empty()) {
      const auto [mean, se] = mean_se(direct_gaps);
      rep.direct_gap = mean;
      rep.direct_se = se;
    }
    reports.push_back(rep);
  }
  return reports;
}

} // namespace spdelab
