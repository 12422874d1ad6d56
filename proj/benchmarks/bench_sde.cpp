// End-to-end stepping throughput: single trajectories and ensembles under
// the explicit and tamed schemes, with and without noise.

#include <benchmark/benchmark.h>

#include "spdelab/galerkin.hpp"
#include "spdelab/operators.hpp"
#include "spdelab/sde.hpp"

using namespace spdelab;

namespace {

StateVec first_mode(int m) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(m);
  c[0] = 1.0;
  return StateVec{c};
}

void bench_path_heat_additive(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  SpacePtr space = GalerkinSpace::build(m, 2.0);
  OperatorTriple op = make_heat(space, 1.0, NoiseSpec{NoiseKind::additive, 0.1, 0});
  SimConfig cfg;
  cfg.T = 0.1;
  cfg.n_steps = 1000;
  cfg.k_noise = m;
  std::uint64_t stream = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        simulate_path(*space, op, zero_control(m), first_mode(m), cfg, stream++));
  }
  state.SetItemsProcessed(state.iterations() * cfg.n_steps);
}

void bench_path_p_laplace_tamed(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  SpacePtr space = GalerkinSpace::build(m, 4.0);
  OperatorTriple op = make_p_laplace(space);
  SimConfig cfg;
  cfg.T = 0.1;
  cfg.n_steps = 1000;
  cfg.k_noise = 1;
  cfg.scheme = Scheme::tamed_em;
  std::uint64_t stream = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        simulate_path(*space, op, zero_control(m), first_mode(m), cfg, stream++));
  }
  state.SetItemsProcessed(state.iterations() * cfg.n_steps);
}

void bench_ensemble_summary(benchmark::State& state) {
  const int m = 8;
  const int n_paths = static_cast<int>(state.range(0));
  SpacePtr space = GalerkinSpace::build(m, 2.0);
  OperatorTriple op = make_heat(space, 1.0, NoiseSpec{NoiseKind::additive, 0.1, 0});
  SimConfig cfg;
  cfg.T = 0.1;
  cfg.n_steps = 200;
  cfg.k_noise = m;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        run_ensemble(*space, op, zero_control(m), first_mode(m), cfg, n_paths));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n_paths) * cfg.n_steps);
}

} // namespace

BENCHMARK(bench_path_heat_additive)->Arg(4)->Arg(16)->Arg(64);
BENCHMARK(bench_path_p_laplace_tamed)->Arg(4)->Arg(16);
BENCHMARK(bench_ensemble_summary)->Arg(64)->Arg(256);

BENCHMARK_MAIN();
