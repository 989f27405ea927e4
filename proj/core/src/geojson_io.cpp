#include "htwin/geojson_io.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include "htwin/error.hpp"

namespace htwin {

namespace {

using nlohmann::json;

GeoPoint position(const json& pos) {
  if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number()) {
    throw Error(Errc::InvalidGeometry, "position must be [lon, lat]");
  }
  GeoPoint p{pos[0].get<double>(), pos[1].get<double>()};
  if (!p.valid()) throw Error(Errc::InvalidGeometry, "position out of WGS84 range");
  return p;
}

const json& features(const json& doc) {
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
      !doc["features"].is_array()) {
    throw Error(Errc::MalformedJson, "expected a GeoJSON FeatureCollection");
  }
  return doc["features"];
}

std::string text_property(const json& props, const char* name, bool required = true) {
  if (!props.contains(name) || props[name].is_null()) {
    if (required) throw Error(Errc::MissingField, name);
    return {};
  }
  const auto& v = props[name];
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw Error(Errc::MalformedJson, std::string("property ") + name + " must be a string");
}

}  // namespace

ZoneSet zones_from_geojson(const json& doc, std::optional<GeoPoint> origin) {
  struct Raw {
    std::string id, name;
    std::vector<GeoPoint> ring;
    std::map<std::string, std::string> tags;
  };
  std::vector<Raw> raws;
  double min_lon = std::numeric_limits<double>::infinity(), max_lon = -min_lon;
  double min_lat = min_lon, max_lat = -min_lon;

  for (const auto& f : features(doc)) {
    const auto& geom = f.at("geometry");
    if (geom.value("type", "") != "Polygon") throw Error(Errc::InvalidGeometry, "zone geometry must be a Polygon");
    const auto& rings = geom.at("coordinates");
    if (!rings.is_array() || rings.empty()) throw Error(Errc::InvalidGeometry, "polygon without rings");
    const json props = f.value("properties", json::object());
    Raw raw;
    raw.id = text_property(props, "id");
    raw.name = text_property(props, "name", false);
    if (props.contains("tags") && props["tags"].is_object()) {
      for (auto& [k, v] : props["tags"].items()) raw.tags[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
    for (const auto& pos : rings[0]) {
      raw.ring.push_back(position(pos));
      min_lon = std::min(min_lon, raw.ring.back().lon);
      max_lon = std::max(max_lon, raw.ring.back().lon);
      min_lat = std::min(min_lat, raw.ring.back().lat);
      max_lat = std::max(max_lat, raw.ring.back().lat);
    }
    raws.push_back(std::move(raw));
  }

  const GeoPoint o = origin ? *origin
                            : (raws.empty() ? GeoPoint{} : GeoPoint{0.5 * (min_lon + max_lon), 0.5 * (min_lat + max_lat)});
  std::vector<Zone> zones;
  zones.reserve(raws.size());
  for (auto& r : raws) zones.emplace_back(std::move(r.id), std::move(r.name), std::move(r.ring), o, std::move(r.tags));
  return ZoneSet(std::move(zones), o);
}

StreetGraph graph_from_geojson(const json& doc, const ZoneSet& zones) {
  std::vector<GraphNode> nodes;
  struct RawEdge {
    GraphEdge edge;
    std::vector<GeoPoint> line;
  };
  std::vector<RawEdge> raw_edges;

  for (const auto& f : features(doc)) {
    const auto& geom = f.at("geometry");
    const std::string type = geom.value("type", "");
    const json props = f.value("properties", json::object());
    if (type == "Point") {
      GraphNode n;
      n.id = text_property(props, "id");
      n.point = position(geom.at("coordinates"));
      n.zone = text_property(props, "zone");
      n.is_gateway = props.value("gateway", false);
      nodes.push_back(std::move(n));
    } else if (type == "LineString") {
      RawEdge e;
      e.edge.id = text_property(props, "id");
      e.edge.a = text_property(props, "a");
      e.edge.b = text_property(props, "b");
      if (!props.contains("walk_cost") || !props["walk_cost"].is_number()) throw Error(Errc::MissingField, "walk_cost");
      e.edge.walk_cost = props["walk_cost"].get<double>();
      for (const auto& pos : geom.at("coordinates")) e.line.push_back(position(pos));
      if (e.line.size() < 2) throw Error(Errc::InvalidGeometry, "edge " + e.edge.id + " needs two positions");
      raw_edges.push_back(std::move(e));
    } else {
      throw Error(Errc::InvalidGeometry, "unexpected graph geometry '" + type + "'");
    }
  }

  std::vector<GraphEdge> edges;
  edges.reserve(raw_edges.size());
  for (auto& r : raw_edges) {
    double length = 0.0;
    for (std::size_t i = 1; i < r.line.size(); ++i) length += distance_m(r.line[i - 1], r.line[i], zones.origin());
    r.edge.length_m = length;
    edges.push_back(std::move(r.edge));
  }
  return StreetGraph(std::move(nodes), std::move(edges), zones);
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedJson, path.string() + ": " + e.what());
  }
}

}  // namespace htwin
