#include <benchmark/benchmark.h>

#include "htwin/fixtures.hpp"
#include "htwin/flowsim.hpp"

namespace {

htwin::SimParams params_for(const htwin::SyntheticNetwork& net, bool stochastic) {
  htwin::SimParams p;
  p.stochastic = stochastic;
  p.seed = 9;
  for (const auto& z : net.zones.zones()) p.initial_population[z.id()] = 150;
  for (const auto& n : net.graph.nodes()) {
    if (n.is_gateway) p.gateway_arrival_rate[n.id] = 10;
  }
  return p;
}

void BM_SimStep(benchmark::State& state) {
  const auto net = htwin::random_network(static_cast<std::size_t>(state.range(0)), 5);
  htwin::FlowSimulator sim(net.graph, params_for(net, state.range(1) != 0));
  auto population = sim.initial_frame().population;
  std::size_t t = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sim.step(t, population));
    t = t % 100000 + 1;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SimStep)->Args({50, 0})->Args({50, 1})->Args({500, 0});

void BM_FramesToNdjson(benchmark::State& state) {
  const auto net = htwin::random_network(50, 5);
  auto p = params_for(net, false);
  p.steps = 288;
  const auto frames = htwin::run_simulation(net.graph, p, std::nullopt);
  for (auto _ : state) benchmark::DoNotOptimize(htwin::frames_to_ndjson(frames));
}
BENCHMARK(BM_FramesToNdjson);

}  // namespace
