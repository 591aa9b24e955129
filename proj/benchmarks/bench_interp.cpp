#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "diffreg/grid.hpp"
#include "diffreg/interp.hpp"

using namespace diffreg;

namespace {

std::vector<Point3> scattered(const Grid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  std::vector<Point3> pts(g.size());
  for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
  return pts;
}

ScalarField smooth(const Grid& g) {
  return ScalarField::from_function(
      g, [](double x, double y, double z) { return std::sin(x) * std::cos(2 * y) + std::sin(z); });
}

void BM_TricubicSerial(benchmark::State& state) {
  const Grid g(static_cast<int>(state.range(0)));
  Interpolator in(PencilPartition(g, 1, 1));
  const auto pts = scattered(g, 1);
  const auto plan = in.plan(pts);
  const auto f = smooth(g);
  for (auto _ : state) benchmark::DoNotOptimize(in.interpolate(plan, f));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(g.size()));
}
BENCHMARK(BM_TricubicSerial)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_TricubicPartitioned(benchmark::State& state) {
  const Grid g(32);
  const int p = static_cast<int>(state.range(0));
  Interpolator in(PencilPartition(g, p, p));
  const auto pts = scattered(g, 1);
  const auto plan = in.plan(pts);
  const auto f = smooth(g);
  for (auto _ : state) benchmark::DoNotOptimize(in.interpolate(plan, f));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(g.size()));
}
BENCHMARK(BM_TricubicPartitioned)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_PlanBuild(benchmark::State& state) {
  const Grid g(32);
  Interpolator in(PencilPartition(g, 2, 2));
  const auto pts = scattered(g, 2);
  for (auto _ : state) benchmark::DoNotOptimize(in.plan(pts));
}
BENCHMARK(BM_PlanBuild)->Unit(benchmark::kMillisecond);

}  // namespace
