#include <benchmark/benchmark.h>

#include "wfl/allocation.hpp"

using namespace wfl;

static void BM_Stepwise(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(stepwise_allocation(n, 10000, 10));
}
BENCHMARK(BM_Stepwise)->Arg(20)->Arg(200);

static void BM_OptimalTwo(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(optimal_two(500, 5, 0.2));
}
BENCHMARK(BM_OptimalTwo);

static void BM_OptimalThree(benchmark::State& state) {
  const double p = static_cast<double>(state.range(0)) / 100.0;
  for (auto _ : state) benchmark::DoNotOptimize(optimal_three(600, 5, p));
}
BENCHMARK(BM_OptimalThree)->Arg(20)->Arg(50)->Arg(90)->Unit(benchmark::kMicrosecond);

static void BM_SweepDelta(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(optimize_delta(20, 10000, 10, 0.2, {0, 10, 20, 30, 40, 50}, 10000, 1));
}
BENCHMARK(BM_SweepDelta)->Unit(benchmark::kMillisecond);
