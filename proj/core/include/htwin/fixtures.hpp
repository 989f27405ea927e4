#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "htwin/geo.hpp"
#include "htwin/time.hpp"
#include "json.hpp"

namespace htwin {

struct FixtureOptions {
  std::size_t zones = 12;
  std::size_t days = 1;
  std::uint64_t seed = 1;
  /// Total NDJSON lines, including the deliberately bad and duplicated ones.
  std::size_t readings = 100000;
  Instant start = from_unix(1717200000);  // 2024-06-01T00:00:00Z
};

/// A synthetic historic-centre dataset: a grid of small zones with a street
/// graph, a sensor registry, heritage assets, one batch of readings and two
/// simulation scenarios. Identical options give identical bytes.
struct FixtureSet {
  nlohmann::json zones;     // GeoJSON
  nlohmann::json graph;     // GeoJSON
  nlohmann::json registry;  // JSON array
  nlohmann::json assets;    // JSON array
  std::string readings;     // NDJSON
  std::vector<std::pair<std::string, nlohmann::json>> scenarios;  // file stem, request
  std::string config_toml;

  /// Writes zones.geojson, graph.geojson, registry.json, assets.json,
  /// readings.ndjson, heritage_twin.toml and scenarios/<name>.json.
  void write(const std::filesystem::path& dir) const;
};

/// Throws Error(InvalidArgument) when the reading budget cannot hold the
/// people-count series.
FixtureSet generate_fixtures(const FixtureOptions& options);

std::string fixture_zone_id(std::size_t index, std::size_t zone_count);

/// Grid of `zones` square-ish zones with centre nodes, grid edges, a few
/// random shortcuts and random walk costs; three gateways.
struct SyntheticNetwork {
  ZoneSet zones;
  StreetGraph graph;
};
SyntheticNetwork random_network(std::size_t zones, std::uint64_t seed);

}  // namespace htwin
