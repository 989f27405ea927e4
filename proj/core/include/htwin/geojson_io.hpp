#pragma once

#include <filesystem>
#include <optional>

#include "htwin/geo.hpp"
#include "json.hpp"

namespace htwin {

// Zones: FeatureCollection of Polygon features with properties id, name, tags.
// When `origin` is absent the projection origin is the centre of the
// collection's bounding box.
ZoneSet zones_from_geojson(const nlohmann::json& doc, std::optional<GeoPoint> origin = std::nullopt);

// Graph: Point features (id, zone, gateway) and LineString features
// (id, a, b, walk_cost). Edge length is the planar length of the LineString.
StreetGraph graph_from_geojson(const nlohmann::json& doc, const ZoneSet& zones);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace htwin
