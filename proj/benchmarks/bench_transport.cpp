#include <benchmark/benchmark.h>

#include "diffreg/problems.hpp"
#include "diffreg/transport.hpp"

using namespace diffreg;

namespace {

void BM_StateSolve(benchmark::State& state) {
  const Grid g(static_cast<int>(state.range(0)));
  SpectralOps ops(g);
  Interpolator in(PencilPartition(g, 1, 1));
  TransportSolver tr(ops, in, 4);
  const auto v = synthetic_velocity(g, false);
  const auto rho = synthetic_template(g);
  const auto dep = tr.departure_points(v, Direction::Forward);
  for (auto _ : state) benchmark::DoNotOptimize(tr.solve_state(dep, rho));
}
BENCHMARK(BM_StateSolve)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_DeparturePoints(benchmark::State& state) {
  const Grid g(static_cast<int>(state.range(0)));
  SpectralOps ops(g);
  Interpolator in(PencilPartition(g, 1, 1));
  TransportSolver tr(ops, in, 4);
  const auto v = synthetic_velocity(g, false);
  for (auto _ : state) benchmark::DoNotOptimize(tr.departure_points(v, Direction::Forward));
}
BENCHMARK(BM_DeparturePoints)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace
