#include "spdelab/energy.hpp"

#include <cmath>
#include <stdexcept>

#include "spdelab/errors.hpp"

namespace spdelab {

namespace {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& x) {
  const auto n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var = x.size() > 1 ? var / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

} // namespace

EnergyStats energy_stats(const PathEnsemble& ensemble, const GalerkinSpace& space,
                         double p, double beta, std::optional<double> c_p) {
  if (ensemble.summaries.empty())
    throw Error("energy_stats: ensemble holds no paths");
  if (!(p >= 2.0)) throw std::invalid_argument("energy_stats: need p >= 2");
  if (!(beta > 1.0)) throw std::invalid_argument("energy_stats: need beta > 1");

  std::vector<double> sup_p, int_p;
  sup_p.reserve(ensemble.summaries.size());
  int_p.reserve(ensemble.summaries.size());
  for (const auto& s : ensemble.summaries) {
    if (s.diverged) continue;
    sup_p.push_back(std::pow(s.sup_h, p));
    int_p.push_back(std::pow(s.int_v_beta, p / 2.0));
  }
  if (sup_p.empty()) throw Error("energy_stats: every path diverged");

  EnergyStats out;
  out.p = p;
  const MeanSe a = mean_se(sup_p);
  const MeanSe b = mean_se(int_p);
  out.est_sup_h = a.mean;
  out.se_sup_h = a.se;
  out.est_int_v = b.mean;
  out.se_int_v = b.se;
  if (c_p) {
    out.has_bound = true;
    const double x0_h = ensemble.x0.norm();
    out.bound_rhs = *c_p * (1.0 + std::pow(x0_h, p));
    out.satisfied = out.est_sup_h <= out.bound_rhs + 3.0 * out.se_sup_h &&
                    out.est_int_v <= out.bound_rhs + 3.0 * out.se_int_v;
  }
  (void)space;
  return out;
}

AldousStat aldous_statistic(const PathEnsemble& ensemble, const GalerkinSpace& space,
                            double delta, double beta) {
  if (ensemble.storage != Storage::full || ensemble.paths.empty())
    throw Error("aldous_statistic: requires an ensemble with full path storage");
  if (!(beta > 1.0)) throw std::invalid_argument("aldous_statistic: need beta > 1");
  const SimConfig& cfg = ensemble.cfg;
  const double dt = cfg.dt();
  if (!(delta > 0.0) || !(delta < cfg.T))
    throw std::invalid_argument("aldous_statistic: need 0 < delta < T");
  const double ratio = delta / dt;
  const int d = static_cast<int>(std::lround(ratio));
  if (d < 1 || std::abs(ratio - d) > 1e-9 * (1.0 + ratio))
    throw std::invalid_argument("aldous_statistic: delta must be a grid multiple of dt");

  const int n = cfg.n_steps;
  std::vector<double> per_path;
  per_path.reserve(ensemble.paths.size());
  for (const auto& path : ensemble.paths) {
    if (path.diverged) continue;
    double acc = 0.0;
    for (int i = 0; i + d <= n; ++i) {
      const double diff = (path.states.row(i + d) - path.states.row(i)).norm();
      acc += dt * std::pow(diff, beta);
    }
    per_path.push_back(acc);
  }
  if (per_path.empty()) throw Error("aldous_statistic: every path diverged");
  const MeanSe ms = mean_se(per_path);
  (void)space;
  return {delta, ms.mean, ms.se};
}

GapSeries uniqueness_gap(const SamplePath& path1, const SamplePath& path2,
                         const GalerkinSpace& space, const GapWeights& weights) {
  const int n = path1.n_steps();
  if (path2.n_steps() != n || path1.dim() != path2.dim())
    throw Error("uniqueness_gap: paths live on different grids");
  for (int j = 0; j <= n; ++j)
    if (path1.times[j] != path2.times[j])
      throw Error("uniqueness_gap: time grids differ");
  if (!path1.has_noise() || !path2.has_noise())
    throw Error("uniqueness_gap: both paths must carry recorded noise");
  if (path1.noise.rows() != path2.noise.rows() ||
      path1.noise.cols() != path2.noise.cols() || path1.noise != path2.noise)
    throw Error("uniqueness_gap: paths were not driven by identical noise");

  GapSeries out;
  out.times.resize(n + 1);
  out.phi.resize(n + 1);
  out.gap.resize(n + 1);
  out.phi[0] = 1.0;
  double phi = 1.0;
  for (int j = 0; j <= n; ++j) {
    out.times[j] = path1.times[j];
    if (j > 0) {
      const double t_prev = path1.times[j - 1];
      const double dt = path1.times[j] - t_prev;
      const StateVec y1(path1.state_at(j - 1));
      const StateVec y2(path2.state_at(j - 1));
      const double rho = weights.rho ? weights.rho(space, y1) : 0.0;
      const double eta = weights.eta ? weights.eta(space, y2) : 0.0;
      const double rate = 2.0 * (weights.f_a(t_prev) + rho + eta) + weights.f_phi(t_prev);
      phi *= std::exp(-dt * rate);
      out.phi[j] = phi;
    }
    const double diff2 = (path1.states.row(j) - path2.states.row(j)).squaredNorm();
    out.gap[j] = out.phi[j] * diff2;
    if (j == 0) out.initial_gap = diff2;
    out.max_gap = std::max(out.max_gap, out.gap[j]);
  }
  return out;
}

} // namespace spdelab
