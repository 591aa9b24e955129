#include <benchmark/benchmark.h>

#include "diffreg/spectral.hpp"

using namespace diffreg;

namespace {

ScalarField smooth(const Grid& g) {
  return ScalarField::from_function(
      g, [](double x, double y, double z) { return std::sin(x) * std::cos(2 * y) + std::sin(z); });
}

void BM_Gradient(benchmark::State& state) {
  const Grid g(static_cast<int>(state.range(0)));
  SpectralOps ops(g);
  const auto f = smooth(g);
  for (auto _ : state) benchmark::DoNotOptimize(ops.gradient(f));
}
BENCHMARK(BM_Gradient)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_LerayProject(benchmark::State& state) {
  const Grid g(static_cast<int>(state.range(0)));
  SpectralOps ops(g);
  const VectorField v(smooth(g), smooth(g), smooth(g));
  for (auto _ : state) benchmark::DoNotOptimize(ops.leray_project(v));
}
BENCHMARK(BM_LerayProject)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_InvBiharmonic(benchmark::State& state) {
  const Grid g(static_cast<int>(state.range(0)));
  SpectralOps ops(g);
  const VectorField v(smooth(g), smooth(g), smooth(g));
  for (auto _ : state) benchmark::DoNotOptimize(ops.inv_biharmonic(v, 1e-2));
}
BENCHMARK(BM_InvBiharmonic)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace
