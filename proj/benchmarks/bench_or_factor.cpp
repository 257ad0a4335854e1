#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "raregraph/graph_engine.hpp"

namespace {

std::vector<raregraph::ProbPair> incoming(std::size_t k) {
  std::mt19937_64 rng(k);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<raregraph::ProbPair> out(k);
  for (auto& m : out) {
    const double p = u(rng);
    m = {1.0 - p, p};
  }
  return out;
}

void BM_MessageToPhysician(benchmark::State& state) {
  const auto in = incoming(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(raregraph::or_factor_message_to_physician(in));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_MessageToPhysician)->RangeMultiplier(4)->Range(1, 4096)->Complexity();

void BM_MessageToPatient(benchmark::State& state) {
  const auto others = incoming(static_cast<std::size_t>(state.range(0)));
  const raregraph::ProbPair phys = {0.7, 0.3};
  for (auto _ : state) benchmark::DoNotOptimize(raregraph::or_factor_message_to_patient(phys, others));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_MessageToPatient)->RangeMultiplier(4)->Range(1, 4096)->Complexity();

// Log-domain kernel used by the inference loops.
void BM_ToPatientLogOdds(benchmark::State& state) {
  double acc = 0.0;
  double x = -3.0;
  for (auto _ : state) {
    acc += raregraph::or_factor::to_patient_log_odds(0.4, x);
    x = x < -0.01 ? x * 0.999 : -3.0;
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_ToPatientLogOdds);

}  // namespace
