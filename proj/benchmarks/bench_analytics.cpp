#include <benchmark/benchmark.h>

#include <random>

#include "htwin/analytics.hpp"

namespace {

void BM_FuseEstimates(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> persons(0, 500), variance(0.1, 100);
  std::vector<htwin::PersonEstimate> e(static_cast<std::size_t>(state.range(0)));
  for (auto& x : e) x = {persons(rng), variance(rng), htwin::SourceKind::Camera};
  for (auto _ : state) benchmark::DoNotOptimize(htwin::fuse_estimates(e));
}
BENCHMARK(BM_FuseEstimates)->Arg(1)->Arg(3)->Arg(6);

void BM_DetectHotspots(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> dens(0, 4);
  std::vector<htwin::DensityPoint> s;
  for (std::int64_t i = 0; i < state.range(0); ++i) s.push_back({htwin::from_unix(i * 300), dens(rng)});
  const htwin::BinWidth w;
  for (auto _ : state) benchmark::DoNotOptimize(htwin::detect_hotspots("Z", s, 2.0, 3, w));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DetectHotspots)->Arg(288)->Arg(8640);

void BM_Pearson(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  std::vector<std::pair<double, double>> xy(static_cast<std::size_t>(state.range(0)));
  for (auto& p : xy) p = {g(rng), g(rng)};
  for (auto _ : state) benchmark::DoNotOptimize(htwin::pearson(xy));
}
BENCHMARK(BM_Pearson)->Arg(288);

}  // namespace
