#include <benchmark/benchmark.h>

#include "wfl/allocation.hpp"
#include "wfl/trainer.hpp"

using namespace wfl;

static void BM_ReferenceOptimum(benchmark::State& state) {
  SyntheticTask task;
  task.dims = static_cast<std::size_t>(state.range(0));
  const Dataset d = make_synthetic_dataset(task, 1);
  for (auto _ : state) benchmark::DoNotOptimize(reference_optimum(d));
}
BENCHMARK(BM_ReferenceOptimum)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

// Twenty federated rounds, ten devices, batch 20 each.
static void BM_TrainFederated(benchmark::State& state) {
  const Dataset d = make_synthetic_dataset(SyntheticTask{}, 1);
  TrainOptions opts;
  opts.optimum = reference_optimum(d);
  ConvergenceConstants c;
  c.smoothness = smoothness_bound(d);
  const SystemConfig cfg{10, 200, 10, 0.2};
  const BatchAllocation a = stepwise_allocation(10, 200, 0);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(train_federated(d, cfg, a, c, 20, seed++, opts));
}
BENCHMARK(BM_TrainFederated)->Unit(benchmark::kMillisecond);
