#include "htwin/gis_export.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>

#include "htwin/error.hpp"

namespace htwin {

using nlohmann::json;

std::string_view to_string(LayerName layer) noexcept {
  switch (layer) {
    case LayerName::Zones: return "zones";
    case LayerName::Sensors: return "sensors";
    case LayerName::Hotspots: return "hotspots";
    case LayerName::Heritage: return "heritage";
    case LayerName::Flow: return "flow";
  }
  return "?";
}

std::optional<LayerName> parse_layer_name(std::string_view text) noexcept {
  for (auto l : {LayerName::Zones, LayerName::Sensors, LayerName::Hotspots, LayerName::Heritage, LayerName::Flow}) {
    if (to_string(l) == text) return l;
  }
  return std::nullopt;
}

std::string layer_file_name(LayerName layer, Instant at) {
  return std::string(to_string(layer)) + "_" + std::to_string(to_unix(at)) + ".geojson";
}

namespace {

void write_coordinate(std::string& out, double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string_view s(buf);
  if (s == "-0.000000") s = "0.000000";
  out += s;
}

void write_position(std::string& out, const json& pos) {
  if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number()) {
    throw Error(Errc::InvalidGeometry, "position must be [lon, lat]");
  }
  out += '[';
  write_coordinate(out, pos[0].get<double>());
  out += ',';
  write_coordinate(out, pos[1].get<double>());
  out += ']';
}

void write_positions(std::string& out, const json& list) {
  out += '[';
  bool first = true;
  for (const auto& p : list) {
    if (!first) out += ',';
    first = false;
    write_position(out, p);
  }
  out += ']';
}

double quantize(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return std::strtod(buf, nullptr);
}

// Signed area of a lon/lat ring on quantized positions; positive means
// counterclockwise.
double ring_orientation(const json& ring) {
  double twice = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    twice += quantize(ring[i][0].get<double>()) * quantize(ring[i + 1][1].get<double>()) -
             quantize(ring[i + 1][0].get<double>()) * quantize(ring[i][1].get<double>());
  }
  return twice;
}

void write_geometry(std::string& out, const json& geom) {
  const std::string type = geom.value("type", "");
  const json& coords = geom.at("coordinates");
  out += "{\"type\":";
  out += json(type).dump();
  out += ",\"coordinates\":";
  if (type == "Point") {
    write_position(out, coords);
  } else if (type == "LineString") {
    write_positions(out, coords);
  } else if (type == "Polygon") {
    out += '[';
    for (std::size_t r = 0; r < coords.size(); ++r) {
      if (r) out += ',';
      json ring = coords[r];
      // Exterior counterclockwise, holes clockwise.
      const bool want_ccw = r == 0;
      if ((ring_orientation(ring) > 0.0) != want_ccw) {
        std::reverse(ring.begin(), ring.end());
      }
      write_positions(out, ring);
    }
    out += ']';
  } else {
    throw Error(Errc::InvalidGeometry, "unsupported geometry type '" + type + "'");
  }
  out += '}';
}

json polygon_of(const Zone& z) {
  json ring = json::array();
  for (const auto& p : z.ring()) ring.push_back({p.lon, p.lat});
  return {{"type", "Polygon"}, {"coordinates", json::array({ring})}};
}

json point_of(GeoPoint p) { return {{"type", "Point"}, {"coordinates", {p.lon, p.lat}}}; }

json feature(json geometry, json properties) {
  return {{"type", "Feature"}, {"geometry", std::move(geometry)}, {"properties", std::move(properties)}};
}

json collection(json features) { return {{"type", "FeatureCollection"}, {"features", std::move(features)}}; }

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string write_feature_collection(const json& fc) {
  if (!fc.is_object() || fc.value("type", "") != "FeatureCollection" || !fc.contains("features") ||
      !fc["features"].is_array()) {
    throw Error(Errc::MalformedJson, "expected a GeoJSON FeatureCollection");
  }
  std::string out = "{\"type\":\"FeatureCollection\",\"features\":[";
  bool first = true;
  for (const auto& f : fc["features"]) {
    out += first ? "\n" : ",\n";
    first = false;
    out += "{\"type\":\"Feature\",\"geometry\":";
    if (!f.contains("geometry") || f["geometry"].is_null()) {
      out += "null";
    } else {
      write_geometry(out, f["geometry"]);
    }
    out += ",\"properties\":";
    out += f.contains("properties") ? f["properties"].dump() : "null";
    out += '}';
  }
  out += first ? "]}\n" : "\n]}\n";
  return out;
}

std::string reserialize_layer(std::string_view geojson) {
  const json doc = json::parse(geojson.begin(), geojson.end(), nullptr, false);
  if (doc.is_discarded()) throw Error(Errc::MalformedJson, "layer is not valid JSON");
  return write_feature_collection(doc);
}

LayerExporter::LayerExporter(const ZoneSet& zones, const StreetGraph& graph, const SensorRegistry& registry,
                             const Store& store, const Analyzer& analyzer)
    : zones_(zones), graph_(graph), registry_(registry), store_(store), analyzer_(analyzer) {}

json LayerExporter::zones_layer(Instant at) const {
  json features = json::array();
  for (const auto& z : zones_.zones()) {
    const ZoneStatus s = analyzer_.zone_status(z.id(), at);
    features.push_back(feature(polygon_of(z), {{"id", z.id()},
                                               {"name", z.name()},
                                               {"area_m2", z.area_m2()},
                                               {"density", optional_number(s.density)},
                                               {"density_variance", optional_number(s.density_variance)},
                                               {"noise_db", optional_number(s.noise_db)},
                                               {"temperature_c", optional_number(s.temperature_c)},
                                               {"heat_island_dt", optional_number(s.heat_island_dt)},
                                               {"hotspot_active", s.hotspot_active},
                                               {"timestamp", format_rfc3339(at)}}));
  }
  return collection(std::move(features));
}

json LayerExporter::sensors_layer() const {
  json features = json::array();
  for (const auto& e : registry_.entries()) {
    const auto last = store_.last_bin({e.zone, e.metric, e.source});
    features.push_back(feature(point_of(e.location),
                               {{"sensor_id", e.sensor_id},
                                {"metric", to_string(e.metric)},
                                {"source_kind", to_string(e.source)},
                                {"zone", e.zone},
                                {"last_value", last ? json(last->value) : json(nullptr)},
                                {"last_timestamp", last ? json(format_rfc3339(last->bin_start)) : json(nullptr)}}));
  }
  return collection(std::move(features));
}

json LayerExporter::hotspots_layer(Instant from, Instant to) const {
  json features = json::array();
  for (const auto& h : analyzer_.hotspots(from, to)) {
    features.push_back(feature(polygon_of(zones_.at(h.zone)), to_json(h)));
  }
  return collection(std::move(features));
}

json LayerExporter::heritage_layer() const {
  json features = json::array();
  for (const auto& a : store_.list_assets()) {
    features.push_back(feature(point_of(a.location), {{"asset_id", a.asset_id},
                                                      {"name", a.name},
                                                      {"zone", a.zone},
                                                      {"category", to_string(a.category)},
                                                      {"condition_note", a.condition_note}}));
  }
  return collection(std::move(features));
}

json LayerExporter::flow_layer(std::span<const SimFrame> frames, std::size_t step) const {
  const SimFrame* frame = nullptr;
  for (const auto& f : frames) {
    if (f.step == step) {
      frame = &f;
      break;
    }
  }
  if (!frame) throw Error(Errc::InvalidArgument, "no frame for step " + std::to_string(step));
  if (frame->layout->zones != graph_.zone_ids() || frame->edge_flow.size() != graph_.edges().size()) {
    throw Error(Errc::ShapeMismatch, "frames were not produced on this street graph");
  }

  json features = json::array();
  for (std::size_t i = 0; i < frame->layout->zones.size(); ++i) {
    const Zone& z = zones_.at(frame->layout->zones[i]);
    features.push_back(feature(point_of(z.centroid()), {{"kind", "zone"},
                                                        {"zone", z.id()},
                                                        {"population", frame->population[i]},
                                                        {"step", frame->step}}));
  }
  for (std::size_t i = 0; i < graph_.edges().size(); ++i) {
    const auto& e = graph_.edges()[i];
    if (frame->layout->edges[i] != e.id) throw Error(Errc::ShapeMismatch, "edge order differs from the graph");
    const GeoPoint a = graph_.find_node(e.a)->point;
    const GeoPoint b = graph_.find_node(e.b)->point;
    json line = {{"type", "LineString"}, {"coordinates", {{a.lon, a.lat}, {b.lon, b.lat}}}};
    features.push_back(feature(std::move(line), {{"kind", "edge"},
                                                 {"edge", e.id},
                                                 {"edge_flow", frame->edge_flow[i]},
                                                 {"step", frame->step}}));
  }
  return collection(std::move(features));
}

}  // namespace htwin
