#pragma once

#include <optional>
#include <vector>

#include "spdelab/galerkin.hpp"
#include "spdelab/operators.hpp"
#include "spdelab/sde.hpp"
#include "spdelab/time_table.hpp"

namespace spdelab {

/// Moment estimates for one ensemble at one moment order p.
struct EnergyStats {
  double p = 2.0;
  double est_sup_h = 0.0;  ///< mean of (sup_t ||Y(t)||_H)^p
  double se_sup_h = 0.0;
  double est_int_v = 0.0;  ///< mean of (integral of ||Y||_V^beta dt)^(p/2)
  double se_int_v = 0.0;
  double bound_rhs = 0.0;  ///< C_p * (1 + ||x0||_H^p), when a constant is given
  bool has_bound = false;
  bool satisfied = true;   ///< both estimates <= bound_rhs + 3*se (vacuous without a bound)
};

/// Sample mean and standard error of both pathwise energy functionals.
/// Works from summaries, so summary-only ensembles are enough. `c_p`
/// supplies the moment-bound constant; omit it to report estimates only.
EnergyStats energy_stats(const PathEnsemble& ensemble, const GalerkinSpace& space,
                         double p, double beta,
                         std::optional<double> c_p = std::nullopt);

struct AldousStat {
  double delta = 0.0;
  double value = 0.0;
  double se = 0.0;
};

/// Time-shift equicontinuity statistic: the ensemble mean of
///   sum_{i : t_i + delta <= T} dt * ||Y(t_i + delta) - Y(t_i)||_H^beta,
/// a left-endpoint sum over the part of the grid where the shift fits.
/// Requires full path storage; `delta` must be a positive grid multiple < T.
AldousStat aldous_statistic(const PathEnsemble& ensemble, const GalerkinSpace& space,
                            double delta, double beta);

/// Weights entering the exponential discount of the two-path gap.
struct GapWeights {
  TimeTable f_a{0.0};
  TimeTable f_phi{0.0};
  StateFunctional rho;  ///< evaluated on the first path; null means zero
  StateFunctional eta;  ///< evaluated on the second path; null means zero
};

struct GapSeries {
  std::vector<double> times;
  std::vector<double> phi;  ///< discount factor, phi[0] = 1
  std::vector<double> gap;  ///< phi[j] * ||Y1(t_j) - Y2(t_j)||_H^2
  double max_gap = 0.0;
  double initial_gap = 0.0;  ///< ||Y1(0) - Y2(0)||_H^2
};

/// Discounted squared-difference series for two paths driven by the same
/// noise. The discount solves phi' = -[2(f_a + rho(Y1) + eta(Y2)) + f_phi] phi
/// by left-endpoint exponential steps. Both paths must carry identical time
/// grids and bit-identical noise records; anything else is a contract error.
GapSeries uniqueness_gap(const SamplePath& path1, const SamplePath& path2,
                         const GalerkinSpace& space, const GapWeights& weights);

} // namespace spdelab
