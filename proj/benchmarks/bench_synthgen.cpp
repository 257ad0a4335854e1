#include <benchmark/benchmark.h>

#include "raregraph/graph_engine.hpp"
#include "raregraph/learning.hpp"
#include "raregraph/synthgen.hpp"

namespace {

using namespace raregraph;

GenConfig config(std::int64_t physicians) {
  GenConfig cfg;
  cfg.num_physicians = static_cast<std::size_t>(physicians);
  cfg.num_patients = static_cast<std::size_t>(physicians) * 36 / 10;
  cfg.prior_eta = 0.02;  // enough positives that every code is observed
  cfg.seed = 42;
  return cfg;
}

void BM_Generate(benchmark::State& state) {
  const auto cfg = config(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample_cohort(cfg));
}
BENCHMARK(BM_Generate)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Fit(benchmark::State& state) {
  const auto cohort = sample_cohort(config(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fit(cohort));
}
BENCHMARK(BM_Fit)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_BuildGraph(benchmark::State& state) {
  const auto cohort = sample_cohort(config(state.range(0)));
  const auto params = fit(cohort);
  for (auto _ : state) benchmark::DoNotOptimize(build(cohort, params));
}
BENCHMARK(BM_BuildGraph)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace
