#pragma once

#include <memory>

#include "htwin/fixtures.hpp"
#include "htwin/geojson_io.hpp"
#include "htwin/hub.hpp"

namespace htwin::test {

/// In-memory hub loaded with a fixture set and, unless told otherwise, its
/// readings.
inline std::unique_ptr<Hub> fixture_hub(const FixtureSet& fs, AnalyticsConfig config = {}, bool ingest = true) {
  auto hub = std::make_unique<Hub>(zones_from_geojson(fs.zones), std::make_unique<Store>(), std::move(config));
  hub->set_graph(graph_from_geojson(fs.graph, hub->zones()));
  hub->set_registry(SensorRegistry::from_json(fs.registry, hub->zones()));
  hub->load_assets(fs.assets);
  if (ingest) hub->ingestor().ingest_text(fs.readings);
  return hub;
}

inline FixtureSet small_fixtures(std::uint64_t seed = 3) {
  FixtureOptions o;
  o.zones = 6;
  o.readings = 12000;
  o.seed = seed;
  return generate_fixtures(o);
}

}  // namespace htwin::test
