#include <benchmark/benchmark.h>

#include "htwin/fixtures.hpp"
#include "htwin/geojson_io.hpp"
#include "htwin/ingest.hpp"

namespace {

void BM_IngestBatch(benchmark::State& state) {
  htwin::FixtureOptions o;
  o.readings = static_cast<std::size_t>(state.range(0));
  const auto fs = htwin::generate_fixtures(o);
  const auto zones = htwin::zones_from_geojson(fs.zones);
  const auto registry = htwin::SensorRegistry::from_json(fs.registry, zones);
  for (auto _ : state) {
    htwin::Store store;
    htwin::Ingestor ingestor(zones, registry, store, htwin::BinWidth{});
    benchmark::DoNotOptimize(ingestor.ingest_text(fs.readings));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_IngestBatch)->Arg(20000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_ParseReading(benchmark::State& state) {
  const auto fs = htwin::generate_fixtures({});
  const auto zones = htwin::zones_from_geojson(fs.zones);
  const auto registry = htwin::SensorRegistry::from_json(fs.registry, zones);
  const std::string line = fs.readings.substr(0, fs.readings.find('\n'));
  for (auto _ : state) benchmark::DoNotOptimize(htwin::parse_reading(line, registry));
}
BENCHMARK(BM_ParseReading);

}  // namespace
