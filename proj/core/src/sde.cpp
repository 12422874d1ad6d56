#include "spdelab/sde.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "spdelab/errors.hpp"
#include "spdelab/rng.hpp"

namespace spdelab {

void SimConfig::validate(const OperatorTriple& op) const {
  if (!(T > 0.0)) throw std::invalid_argument("SimConfig: need T > 0");
  if (n_steps < 1) throw std::invalid_argument("SimConfig: need n_steps >= 1");
  if (k_noise < 1) throw std::invalid_argument("SimConfig: need k_noise >= 1");
  if (k_noise != op.noise_dim)
    throw std::invalid_argument("SimConfig: k_noise must match the operator's noise dimension");
  if (!(taming_power > 0.0)) throw std::invalid_argument("SimConfig: need taming_power > 0");
  if (!(divergence_cap >= 0.0 && divergence_cap <= 1.0))
    throw std::invalid_argument("SimConfig: divergence_cap must lie in [0, 1]");
}

FeedbackMap zero_control(int m) {
  return [m](double, const StateVec&) { return Eigen::VectorXd::Zero(m).eval(); };
}

namespace {

/// Shared one-step kernel. `drift_state` feeds the drift A (and intrinsic
/// forcing); `input_state` feeds the control and the diffusion. The direct
/// scheme passes the same state twice; the frozen-input system passes the
/// frozen path's state as `input_state`. Keeping one kernel keeps the two
/// flows bit-identical when their inputs coincide.
Eigen::VectorXd em_core(const OperatorTriple& op, const FeedbackMap& control,
                        const StateVec& drift_state, const StateVec& input_state,
                        double t, double dt, const Eigen::VectorXd& dW,
                        Scheme scheme, double taming_power) {
  Eigen::VectorXd D = op.A(t, drift_state) + op.Phi(t, drift_state) +
                      control(t, input_state);
  if (scheme == Scheme::tamed_em) {
    D /= 1.0 + dt * std::pow(D.norm(), taming_power);
#ifndef NDEBUG
    if (taming_power == 1.0) assert(dt * D.norm() <= 1.0 + 1e-12);
#endif
  }
  return drift_state.coeffs() + dt * D + op.B(t, input_state) * dW;
}

struct PathWorkspace {
  PathRng* rng = nullptr;                 // draws increments when set
  const Eigen::MatrixXd* given = nullptr; // or replays these
  const SamplePath* frozen = nullptr;     // frozen-input source, if any
};

SamplePath simulate_impl(const GalerkinSpace& space, const OperatorTriple& op,
                         const FeedbackMap& control, const StateVec& x0,
                         const SimConfig& cfg, PathWorkspace ws) {
  cfg.validate(op);
  if (x0.dim() != space.dim())
    throw std::invalid_argument("simulate: initial state dimension mismatch");
  const int n = cfg.n_steps;
  const int m = space.dim();
  const int k = cfg.k_noise;
  const double dt = cfg.dt();
  const double beta = op.params.beta;
  const bool record = cfg.store_noise || ws.given != nullptr;

  SamplePath path;
  path.times.resize(n + 1);
  path.states.resize(n + 1, m);
  path.v_beta_running.resize(n + 1);
  if (record) path.noise.resize(n, k);

  Eigen::VectorXd u = x0.coeffs();
  path.states.row(0) = u;
  path.v_beta_running[0] = 0.0;
  path.times[0] = 0.0;
  bool stopped = false;
  path.tau_exit = cfg.T;

  Eigen::VectorXd dW(k);
  for (int j = 0; j < n; ++j) {
    const double t = j * dt;
    if (!stopped && cfg.stop.enabled()) {
      const bool hit_h = cfg.stop.n_h > 0.0 && u.squaredNorm() > cfg.stop.n_h;
      const bool hit_v = cfg.stop.n_v > 0.0 && path.v_beta_running[j] > cfg.stop.n_v;
      if (hit_h || hit_v) {
        stopped = true;
        path.tau_exit = t;
      }
    }
    if (ws.given) {
      dW = ws.given->row(j);
    } else {
      ws.rng->fill_gaussian(dW, std::sqrt(dt));
    }
    if (record) path.noise.row(j) = dW;

    const StateVec u_state(u);
    const double vn = space.v_norm(u_state);
    path.v_beta_running[j + 1] = path.v_beta_running[j] + dt * std::pow(vn, beta);

    if (!path.diverged && !(cfg.hard_stop && stopped)) {
      Eigen::VectorXd next;
      if (ws.frozen) {
        next = em_core(op, control, u_state, ws.frozen->state_at(j), t, dt, dW,
                       cfg.scheme, cfg.taming_power);
      } else {
        next = em_core(op, control, u_state, u_state, t, dt, dW, cfg.scheme,
                       cfg.taming_power);
      }
      if (next.allFinite()) {
        u = std::move(next);
      } else {
        path.diverged = true;
        path.diverged_at = (j + 1) * dt;
      }
    }
    path.states.row(j + 1) = u;
    path.times[j + 1] = (j + 1) * dt;
  }
  // A crossing first detected at the terminal node leaves tau_exit == T,
  // identical to the never-crossed value by construction.
  return path;
}

} // namespace

StateVec step(const GalerkinSpace& space, const OperatorTriple& op,
              const FeedbackMap& control, const StateVec& u, double t, double dt,
              const Eigen::VectorXd& dW, Scheme scheme, double taming_power) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: need dt > 0");
  if (dW.size() != op.noise_dim)
    throw std::invalid_argument("step: dW must have k_noise entries");
  Eigen::VectorXd next = em_core(op, control, u, u, t, dt, dW, scheme, taming_power);
  if (!next.allFinite())
    throw DivergenceError("step: non-finite state update", t, space.h_norm(u));
  return StateVec(std::move(next));
}

SamplePath simulate_path(const GalerkinSpace& space, const OperatorTriple& op,
                         const FeedbackMap& control, const StateVec& x0,
                         const SimConfig& cfg, std::uint64_t stream) {
  PathRng rng(cfg.seed, stream);
  PathWorkspace ws;
  ws.rng = &rng;
  return simulate_impl(space, op, control, x0, cfg, ws);
}

SamplePath simulate_path_given_noise(const GalerkinSpace& space, const OperatorTriple& op,
                                     const FeedbackMap& control, const StateVec& x0,
                                     const SimConfig& cfg, const Eigen::MatrixXd& noise) {
  if (noise.rows() != cfg.n_steps || noise.cols() != cfg.k_noise)
    throw std::invalid_argument("simulate_path_given_noise: noise must be n_steps x k_noise");
  PathWorkspace ws;
  ws.given = &noise;
  return simulate_impl(space, op, control, x0, cfg, ws);
}

SamplePath simulate_auxiliary(const GalerkinSpace& space, const OperatorTriple& op,
                              const FeedbackMap& control_n, const SamplePath& frozen,
                              const SimConfig& cfg) {
  if (!frozen.has_noise())
    throw Error("simulate_auxiliary: frozen path has no recorded noise");
  if (frozen.n_steps() != cfg.n_steps || frozen.dim() != space.dim() ||
      std::abs(frozen.times[frozen.n_steps()] - cfg.T) > 1e-12 * (1.0 + cfg.T))
    throw Error("simulate_auxiliary: frozen path grid does not match the config");
  if (frozen.noise.cols() != cfg.k_noise)
    throw Error("simulate_auxiliary: frozen noise record has wrong channel count");
  PathWorkspace ws;
  ws.given = &frozen.noise;
  ws.frozen = &frozen;
  return simulate_impl(space, op, control_n, frozen.state_at(0), cfg, ws);
}

PathSummary summarize(const SamplePath& path) {
  PathSummary s;
  const int n = path.n_steps();
  s.terminal = path.states.row(n);
  s.sup_h = 0.0;
  for (int j = 0; j <= n; ++j)
    s.sup_h = std::max(s.sup_h, path.states.row(j).norm());
  s.int_v_beta = path.v_beta_running[n];
  s.tau_exit = path.tau_exit;
  s.diverged = path.diverged;
  return s;
}

int PathEnsemble::divergent_count() const {
  int c = 0;
  for (const auto& s : summaries) c += s.diverged ? 1 : 0;
  return c;
}

PathEnsemble run_ensemble(const GalerkinSpace& space, const OperatorTriple& op,
                          const FeedbackMap& control, const StateVec& x0,
                          const SimConfig& cfg, int n_paths, Storage storage,
                          int n_threads) {
  if (n_paths < 1) throw std::invalid_argument("run_ensemble: need n_paths >= 1");
  cfg.validate(op);
  PathEnsemble ens;
  ens.master_seed = cfg.seed;
  ens.cfg = cfg;
  ens.storage = storage;
  ens.x0 = x0.coeffs();
  ens.summaries.resize(n_paths);
  if (storage == Storage::full) ens.paths.resize(n_paths);

  auto work = [&](int first, int stride) {
    for (int p = first; p < n_paths; p += stride) {
      SamplePath path = simulate_path(space, op, control, x0, cfg,
                                      static_cast<std::uint64_t>(p));
      ens.summaries[p] = summarize(path);
      if (storage == Storage::full) ens.paths[p] = std::move(path);
    }
  };

  if (n_threads <= 1 || n_paths == 1) {
    work(0, 1);
  } else {
    const int nt = std::min(n_threads, n_paths);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(nt);
    for (int w = 0; w < nt; ++w)
      pool.emplace_back([&, w] {
        try {
          work(w, nt);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  const int bad = ens.divergent_count();
  if (static_cast<double>(bad) > cfg.divergence_cap * n_paths)
    throw EnsembleError("run_ensemble: divergent fraction exceeds the cap", bad, n_paths);
  return ens;
}

} // namespace spdelab
