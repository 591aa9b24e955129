#include <benchmark/benchmark.h>

#include "diffreg/optimizer.hpp"
#include "diffreg/problems.hpp"

using namespace diffreg;

namespace {

SolverConfig config() {
  SolverConfig c;
  c.beta = 1e-2;
  c.n_t = 4;
  return c;
}

void BM_ReducedGradient(benchmark::State& state) {
  const Grid g(static_cast<int>(state.range(0)));
  const auto syn = make_synthetic(g, false, 4);
  ReducedSpaceProblem rsp(syn.problem, config());
  VectorField v = synthetic_velocity(g, false);
  scale(v, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(rsp.gradient(v));
}
BENCHMARK(BM_ReducedGradient)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_GaussNewtonMatvec(benchmark::State& state) {
  const Grid g(static_cast<int>(state.range(0)));
  const auto syn = make_synthetic(g, false, 4);
  ReducedSpaceProblem rsp(syn.problem, config());
  VectorField v = synthetic_velocity(g, false);
  scale(v, 0.5);
  const auto grad = rsp.gradient(v);
  for (auto _ : state) benchmark::DoNotOptimize(rsp.hessian_matvec(grad));
}
BENCHMARK(BM_GaussNewtonMatvec)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace
