// Parallel kernels against their serial references.

#include "agentsim/nn/kernels.hpp"
#include "agentsim/rng.hpp"
#include "agentsim/rollout/engine.hpp"
#include "agentsim/scenario/generator.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

#include <cmath>
#include <vector>

using namespace agentsim;
using nn::kernels::Trans;

namespace
{
std::vector<double> random_buffer(std::size_t n, std::uint64_t seed)
{
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto & x : v) {
    x = rng.uniform(-1, 1);
  }
  return v;
}

template <bool Parallel>
void BM_Gemm(benchmark::State & state)
{
  const auto n = static_cast<std::size_t>(state.range(0));
  omp_set_num_threads(static_cast<int>(state.range(1)));
  const auto a = random_buffer(n * n, 1);
  const auto b = random_buffer(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      nn::kernels::gemm(Trans::no, Trans::yes, n, n, n, a.data(), b.data(), c.data(), false);
    } else {
      nn::kernels::reference::gemm(Trans::no, Trans::yes, n, n, n, a.data(), b.data(), c.data(), false);
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * static_cast<std::int64_t>(2 * n * n * n));
}

const Scenario & bench_scenario()
{
  static const Scenario s = [] {
    GeneratorConfig g;
    g.straight_road = 1;
    g.curve = 0;
    g.four_way_intersection = 0;
    g.min_agents = 6;
    g.max_agents = 6;
    return generate_synthetic_corpus(g, 9)[0];
  }();
  return s;
}

void BM_SimulationSet(benchmark::State & state)
{
  static SimModel model = [] {
    SimModel m(ModelConfig::from_preset("micro"), 1);
    for (AgentCategory c : {AgentCategory::vehicle, AgentCategory::pedestrian, AgentCategory::cyclist}) {
      IntentionPointSet s;
      s.category = c;
      for (std::size_t i = 0; i < m.config().modes; ++i) {
        s.points.push_back({3.0 + 2.0 * static_cast<double>(i), 0.5 * static_cast<double>(i) - 1.0});
      }
      s.requested_k = s.points.size();
      m.set_intention_points(s);
    }
    return m;
  }();
  RolloutConfig cfg;
  cfg.rollouts = 8;
  cfg.steps = 20;
  cfg.reencode_period = 5;
  cfg.parallel = state.range(0) != 0;
  omp_set_num_threads(static_cast<int>(state.range(1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_simulation_set(bench_scenario(), {&model}, LogReplayPolicy{}, cfg));
  }
}
}  // namespace

BENCHMARK(BM_Gemm<false>)->ArgsProduct({{64, 128, 256}, {1}})->ArgNames({"n", "threads"})->Name("gemm/reference");
BENCHMARK(BM_Gemm<true>)
  ->ArgsProduct({{64, 128, 256}, {1, 2, 4}})
  ->ArgNames({"n", "threads"})
  ->Name("gemm/parallel");
BENCHMARK(BM_SimulationSet)
  ->Args({0, 1})
  ->Args({1, 1})
  ->Args({1, 2})
  ->Args({1, 4})
  ->ArgNames({"parallel", "threads"})
  ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
