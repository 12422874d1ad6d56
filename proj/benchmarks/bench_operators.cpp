// Throughput of the hot per-step kernels: drift evaluation and the
// energy-norm quadrature, across spectral dimension and nonlinearity.

#include <benchmark/benchmark.h>

#include "spdelab/galerkin.hpp"
#include "spdelab/operators.hpp"
#include "spdelab/rng.hpp"

using namespace spdelab;

namespace {

StateVec random_state(const GalerkinSpace& space, std::uint64_t stream) {
  PathRng rng(17, stream);
  Eigen::VectorXd c(space.dim());
  rng.fill_gaussian(c, 1.0);
  return StateVec{c};
}

void bench_heat_drift(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  SpacePtr space = GalerkinSpace::build(m, 2.0);
  OperatorTriple op = make_heat(space, 1.0);
  StateVec u = random_state(*space, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(op.A(0.0, u));
  }
  state.SetItemsProcessed(state.iterations());
}

void bench_p_laplace_drift(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  SpacePtr space = GalerkinSpace::build(m, 4.0);
  OperatorTriple op = make_p_laplace(space);
  StateVec u = random_state(*space, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(op.A(0.0, u));
  }
  state.SetItemsProcessed(state.iterations());
}

void bench_v_norm_parseval(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  SpacePtr space = GalerkinSpace::build(m, 2.0);
  StateVec u = random_state(*space, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(space->v_norm(u));
  }
  state.SetItemsProcessed(state.iterations());
}

void bench_v_norm_quadrature(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  SpacePtr space = GalerkinSpace::build(m, 4.0);
  StateVec u = random_state(*space, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(space->v_norm(u));
  }
  state.SetItemsProcessed(state.iterations());
}

} // namespace

BENCHMARK(bench_heat_drift)->Arg(4)->Arg(16)->Arg(64);
BENCHMARK(bench_p_laplace_drift)->Arg(4)->Arg(16)->Arg(64);
BENCHMARK(bench_v_norm_parseval)->Arg(4)->Arg(16)->Arg(64);
BENCHMARK(bench_v_norm_quadrature)->Arg(4)->Arg(16)->Arg(64);
