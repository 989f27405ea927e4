#include <benchmark/benchmark.h>

#include <random>

#include "htwin/fixtures.hpp"

namespace {

void BM_Locate(benchmark::State& state) {
  const auto net = htwin::random_network(static_cast<std::size_t>(state.range(0)), 1);
  const auto& zones = net.zones;
  htwin::BBox box{1e300, 1e300, -1e300, -1e300};
  for (const auto& z : zones.zones()) {
    box.min_x = std::min(box.min_x, z.bbox().min_x);
    box.min_y = std::min(box.min_y, z.bbox().min_y);
    box.max_x = std::max(box.max_x, z.bbox().max_x);
    box.max_y = std::max(box.max_y, z.bbox().max_y);
  }
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ux(box.min_x, box.max_x), uy(box.min_y, box.max_y);
  std::vector<htwin::GeoPoint> points;
  for (int i = 0; i < 4096; ++i) points.push_back(htwin::from_local({ux(rng), uy(rng)}, zones.origin()));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(zones.locate(points[i++ & 4095]));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Locate)->Arg(12)->Arg(100)->Arg(1000);

void BM_LocateLinear(benchmark::State& state) {
  const auto net = htwin::random_network(static_cast<std::size_t>(state.range(0)), 1);
  const auto p = net.zones.zones().back().centroid();
  for (auto _ : state) benchmark::DoNotOptimize(net.zones.locate_linear(p));
}
BENCHMARK(BM_LocateLinear)->Arg(12)->Arg(100)->Arg(1000);

}  // namespace
