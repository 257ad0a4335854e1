#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "raregraph/graph_engine.hpp"

namespace {

using namespace raregraph;

// `components` disjoint stars of one physician and `fanout` patients, plus
// `extra` random cross links per component that close cycles.
FactorGraph star_forest(std::size_t components, std::size_t fanout, std::size_t extra, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> ev(0.0, 2.0);
  const std::size_t phys_per = 1 + extra;
  std::vector<LogMessage> phys(components * phys_per);
  std::vector<LogMessage> pats(components * fanout);
  for (auto& m : phys) m = {0.0, ev(rng)};
  for (auto& m : pats) m = {0.0, ev(rng)};
  std::vector<Link> links;
  for (std::size_t c = 0; c < components; ++c) {
    const auto p0 = static_cast<std::uint32_t>(c * phys_per);
    const auto j0 = static_cast<std::uint32_t>(c * fanout);
    for (std::uint32_t j = 0; j < fanout; ++j) links.push_back({p0, j0 + j});
    std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(fanout - 1));
    for (std::uint32_t e = 1; e <= extra; ++e) {
      const auto a = pick(rng);
      auto b = pick(rng);
      if (b == a) b = (a + 1) % static_cast<std::uint32_t>(fanout);
      links.push_back({p0 + e, j0 + a});
      links.push_back({p0 + e, j0 + b});
    }
  }
  return FactorGraph::from_evidence(std::move(phys), std::move(pats), links);
}

void BM_TreeInference(benchmark::State& state) {
  const auto g = star_forest(static_cast<std::size_t>(state.range(0)), 20, 0, 1);
  InferenceConfig cfg;
  cfg.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(run_inference(g, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.num_edges()));
}
BENCHMARK(BM_TreeInference)->Arg(100)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_LoopyInference(benchmark::State& state) {
  const auto g = star_forest(static_cast<std::size_t>(state.range(0)), 20, 3, 2);
  InferenceConfig cfg;
  cfg.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(run_inference(g, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.num_edges()));
}
BENCHMARK(BM_LoopyInference)->Arg(100)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace
