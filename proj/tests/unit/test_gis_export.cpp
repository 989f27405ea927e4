#include "doctest.h"
#include "fixture_hub.hpp"
#include "geojson_check.hpp"
#include "htwin/error.hpp"
#include "htwin/gis_export.hpp"
#include "support.hpp"

using namespace htwin;
using namespace htwin::test;
using nlohmann::json;

namespace {

json square(bool clockwise) {
  json ring = clockwise ? json::parse("[[0,0],[0,1],[1,1],[1,0],[0,0]]") : json::parse("[[0,0],[1,0],[1,1],[0,1],[0,0]]");
  return {{"type", "Feature"},
          {"geometry", {{"type", "Polygon"}, {"coordinates", {ring}}}},
          {"properties", {{"b", 2}, {"a", 1}}}};
}

const json& props_of(const json& fc, const char* key, const std::string& value) {
  for (const auto& f : fc["features"]) {
    if (f["properties"][key] == value) return f["properties"];
  }
  throw std::runtime_error("feature not found: " + value);
}

}  // namespace

TEST_CASE("layer names") {
  CHECK(parse_layer_name("zones") == LayerName::Zones);
  CHECK(parse_layer_name("flow") == LayerName::Flow);
  CHECK_FALSE(parse_layer_name("roads"));
  CHECK(layer_file_name(LayerName::Hotspots, from_unix(1717243200)) == "hotspots_1717243200.geojson");
}

TEST_CASE("canonical writer") {
  const json fc = {{"type", "FeatureCollection"}, {"features", {square(true)}}};
  const std::string text = write_feature_collection(fc);
  CHECK(text ==
        "{\"type\":\"FeatureCollection\",\"features\":[\n"
        "{\"type\":\"Feature\",\"geometry\":{\"type\":\"Polygon\",\"coordinates\":[[[0.000000,0.000000],"
        "[1.000000,0.000000],[1.000000,1.000000],[0.000000,1.000000],[0.000000,0.000000]]]},"
        "\"properties\":{\"a\":1,\"b\":2}}\n]}\n");
  CHECK(write_feature_collection({{"type", "FeatureCollection"}, {"features", {square(false)}}}) == text);
  CHECK(reserialize_layer(text) == text);
  CHECK(rfc7946_problem(json::parse(text)).empty());

  CHECK(write_feature_collection({{"type", "FeatureCollection"}, {"features", json::array()}}) ==
        "{\"type\":\"FeatureCollection\",\"features\":[]}\n");

  const json pt = {{"type", "FeatureCollection"},
                   {"features", {{{"type", "Feature"},
                                  {"geometry", {{"type", "Point"}, {"coordinates", {-0.0000001, 12.3456789}}}},
                                  {"properties", json::object()}}}}};
  CHECK(write_feature_collection(pt).find("[0.000000,12.345679]") != std::string::npos);

  CHECK_THROWS_AS(write_feature_collection(json::array()), Error);
  CHECK_THROWS_AS(reserialize_layer("{"), Error);
  const json multi = {{"type", "FeatureCollection"},
                      {"features", {{{"type", "Feature"}, {"geometry", {{"type", "MultiPoint"}, {"coordinates", json::array()}}}}}}};
  CHECK_THROWS_AS(write_feature_collection(multi), Error);
}

TEST_CASE("holes come out clockwise") {
  const json doc = json::parse(R"({"type":"FeatureCollection","features":[{"type":"Feature","properties":{},
    "geometry":{"type":"Polygon","coordinates":[
      [[0,0],[0,4],[4,4],[4,0],[0,0]],
      [[1,1],[2,1],[2,2],[1,2],[1,1]]]}}]})");
  const auto out = json::parse(write_feature_collection(doc));
  CHECK(rfc7946_problem(out).empty());
}

TEST_CASE("fixture layers agree with the module queries") {
  const auto fs = small_fixtures();
  auto hub = fixture_hub(fs);
  const auto ex = hub->exporter();
  const Instant noon = from_unix(1717243200);

  const json zones = json::parse(ex.export_zones(noon));
  CHECK(rfc7946_problem(zones).empty());
  REQUIRE(zones["features"].size() == hub->zones().size());
  for (const auto& z : hub->zones().zones()) {
    const auto& p = props_of(zones, "id", z.id());
    const auto s = hub->analyzer().zone_status(z.id(), noon);
    CHECK(p["hotspot_active"] == s.hotspot_active);
    CHECK(p["area_m2"].get<double>() == z.area_m2());
    if (s.density) {
      CHECK(p["density"].get<double>() == *s.density);
    } else {
      CHECK(p["density"].is_null());
    }
    if (s.noise_db) CHECK(p["noise_db"].get<double>() == *s.noise_db);
    if (s.temperature_c) CHECK(p["temperature_c"].get<double>() == *s.temperature_c);
    CHECK(p["timestamp"] == "2024-06-01T12:00:00Z");
  }

  const json sensors = json::parse(ex.export_sensors());
  CHECK(rfc7946_problem(sensors).empty());
  REQUIRE(sensors["features"].size() == hub->registry().entries().size());
  for (const auto& e : hub->registry().entries()) {
    const auto& p = props_of(sensors, "sensor_id", e.sensor_id);
    const auto last = hub->store().last_bin({e.zone, e.metric, e.source});
    REQUIRE(last.has_value());
    CHECK(p["last_value"].get<double>() == last->value);
    CHECK(p["zone"] == e.zone);
  }

  const json hotspots = json::parse(ex.export_hotspots(kBeginningOfTime, kEndOfTime));
  CHECK(rfc7946_problem(hotspots).empty());
  const auto expected = hub->analyzer().hotspots(kBeginningOfTime, kEndOfTime);
  REQUIRE(hotspots["features"].size() == expected.size());
  CHECK_FALSE(expected.empty());
  for (std::size_t i = 0; i < expected.size(); ++i) CHECK(hotspots["features"][i]["properties"] == to_json(expected[i]));

  const json heritage = json::parse(ex.export_heritage());
  CHECK(rfc7946_problem(heritage).empty());
  CHECK(heritage["features"].size() == hub->store().list_assets().size());

  for (const std::string& text : {ex.export_zones(noon), ex.export_sensors(), ex.export_heritage(),
                                  ex.export_hotspots(kBeginningOfTime, kEndOfTime)}) {
    CHECK(reserialize_layer(text) == text);
  }
}

TEST_CASE("flow layer") {
  const auto fs = small_fixtures();
  auto hub = fixture_hub(fs);
  SimParams p;
  p.steps = 4;
  for (const auto& z : hub->zones().zones()) p.initial_population[z.id()] = 50;
  const auto frames = run_simulation(hub->graph(), p, std::nullopt);
  const auto ex = hub->exporter();
  const std::string text = ex.export_flow(frames, 3);
  const json fc = json::parse(text);
  CHECK(rfc7946_problem(fc).empty());
  CHECK(reserialize_layer(text) == text);
  REQUIRE(fc["features"].size() == hub->zones().size() + hub->graph().edges().size());
  for (std::size_t i = 0; i < hub->zones().size(); ++i) {
    CHECK(fc["features"][i]["properties"]["population"].get<double>() == frames[3].population[i]);
    CHECK(fc["features"][i]["properties"]["step"] == 3);
  }
  const auto& first_edge = fc["features"][hub->zones().size()];
  CHECK(first_edge["geometry"]["type"] == "LineString");
  CHECK(first_edge["properties"]["edge_flow"].get<double>() == frames[3].edge_flow[0]);
  CHECK_THROWS_AS(ex.flow_layer(frames, 9), Error);

  const ZoneSet other = zone_row(2);
  const StreetGraph g({{"NA", local(50, 50), "A", true}, {"NB", local(150, 50), "B", false}},
                      {{"E", "NA", "NB", 100, 2}}, other);
  const auto foreign = run_simulation(g, SimParams{}, std::nullopt);
  try {
    ex.flow_layer(foreign, 0);
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ShapeMismatch);
  }
}
