#include <set>
#include <sstream>

#include "doctest.h"
#include "htwin/config.hpp"
#include "htwin/error.hpp"
#include "htwin/fixtures.hpp"
#include "htwin/geojson_io.hpp"
#include "htwin/hub.hpp"
#include "support.hpp"

using namespace htwin;
using namespace htwin::test;

namespace {

FixtureOptions small(std::uint64_t seed) {
  FixtureOptions o;
  o.zones = 6;
  o.readings = 8000;
  o.seed = seed;
  return o;
}

std::size_t line_count(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("fixtures are deterministic per seed") {
  const auto a = generate_fixtures(small(5));
  const auto b = generate_fixtures(small(5));
  const auto c = generate_fixtures(small(6));
  CHECK(a.readings == b.readings);
  CHECK(a.zones == b.zones);
  CHECK(a.registry == b.registry);
  CHECK(a.readings != c.readings);
}

TEST_CASE("fixture shape") {
  const auto fs = generate_fixtures(small(2));
  CHECK(line_count(fs.readings) == 8000);
  const ZoneSet zones = zones_from_geojson(fs.zones);
  CHECK(zones.size() == 6);
  CHECK(zones.contains(fixture_zone_id(0, 6)));
  CHECK(fixture_zone_id(11, 12) == "Z12");

  const StreetGraph graph = graph_from_geojson(fs.graph, zones);
  CHECK(graph.zone_ids().size() == 6);
  std::size_t gateways = 0;
  for (const auto& n : graph.nodes()) gateways += n.is_gateway;
  CHECK(gateways >= 1);

  const auto registry = SensorRegistry::from_json(fs.registry, zones);
  std::set<ZoneId> camera_zones;
  for (const auto& e : registry.entries()) {
    if (e.source == SourceKind::Camera) camera_zones.insert(e.zone);
  }
  CHECK(camera_zones.size() == 6);

  std::set<std::string> names;
  for (const auto& [name, _] : fs.scenarios) names.insert(name);
  CHECK(names == std::set<std::string>{"baseline", "event"});
  for (const auto& [name, request] : fs.scenarios) {
    const auto req = simulation_request_from_json(request);
    CHECK_NOTHROW(FlowSimulator(graph, req.params, req.scenario));
  }
  CHECK_THROWS_AS(generate_fixtures([] {
                    FixtureOptions o;
                    o.readings = 10;
                    return o;
                  }()),
                  Error);
}

TEST_CASE("written fixtures open as a hub") {
  TempDir dir;
  const auto fs = generate_fixtures(small(4));
  fs.write(dir.path());
  for (const char* f : {"zones.geojson", "graph.geojson", "registry.json", "assets.json", "readings.ndjson",
                        "heritage_twin.toml", "scenarios/baseline.json", "scenarios/event.json"}) {
    CHECK(std::filesystem::exists(dir.path() / f));
  }
  const auto config = load_config(dir.path() / "heritage_twin.toml");
  auto hub = Hub::open(config);
  CHECK(hub->zones().size() == 6);
  CHECK_FALSE(hub->store().list_assets().empty());
  const auto report = hub->ingestor().ingest_text(fs.readings);
  CHECK(report.accepted > 7000);
  CHECK(report.duplicates > 0);
  CHECK_FALSE(report.rejected.empty());
  CHECK(report.total() == 8000);
}

TEST_CASE("random networks") {
  const auto a = random_network(50, 9);
  const auto b = random_network(50, 9);
  CHECK(a.zones.size() == 50);
  CHECK(a.graph.edges().size() >= 49);
  REQUIRE(a.graph.edges().size() == b.graph.edges().size());
  for (std::size_t i = 0; i < a.graph.edges().size(); ++i) CHECK(a.graph.edges()[i].walk_cost == b.graph.edges()[i].walk_cost);
  for (const auto& z : a.zones.zones()) CHECK_FALSE(a.graph.neighbors(z.id()).empty());
}
