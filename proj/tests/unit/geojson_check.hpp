#pragma once

#include <cmath>
#include <string>

#include "json.hpp"

namespace htwin::test {

// Structural checks of a FeatureCollection against RFC 7946. Returns an empty
// string when the document conforms, otherwise the first problem found.
namespace detail {

inline std::string check_position(const nlohmann::json& p) {
  if (!p.is_array() || p.size() < 2 || p.size() > 3) return "position must hold 2 or 3 numbers";
  for (const auto& c : p) {
    if (!c.is_number() || !std::isfinite(c.get<double>())) return "position holds a non-number";
  }
  const double lon = p[0].get<double>(), lat = p[1].get<double>();
  if (lon < -180 || lon > 180 || lat < -90 || lat > 90) return "position outside WGS84 bounds";
  return "";
}

inline double ring_area2(const nlohmann::json& ring) {
  double a = 0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    a += ring[i][0].get<double>() * ring[i + 1][1].get<double>() -
         ring[i + 1][0].get<double>() * ring[i][1].get<double>();
  }
  return a;
}

inline std::string check_geometry(const nlohmann::json& g) {
  if (g.is_null()) return "";
  if (!g.is_object() || !g.contains("type") || !g.contains("coordinates")) return "geometry needs type and coordinates";
  const std::string type = g["type"].get<std::string>();
  const auto& c = g["coordinates"];
  if (type == "Point") return check_position(c);
  if (type == "LineString") {
    if (!c.is_array() || c.size() < 2) return "LineString needs two or more positions";
    for (const auto& p : c) {
      if (auto e = check_position(p); !e.empty()) return e;
    }
    return "";
  }
  if (type == "Polygon") {
    if (!c.is_array() || c.empty()) return "Polygon needs at least one ring";
    for (std::size_t r = 0; r < c.size(); ++r) {
      const auto& ring = c[r];
      if (!ring.is_array() || ring.size() < 4) return "linear ring needs four or more positions";
      for (const auto& p : ring) {
        if (auto e = check_position(p); !e.empty()) return e;
      }
      if (ring.front() != ring.back()) return "linear ring is not closed";
      const double a = ring_area2(ring);
      if (r == 0 && !(a > 0)) return "exterior ring is not counterclockwise";
      if (r > 0 && !(a < 0)) return "interior ring is not clockwise";
    }
    return "";
  }
  return "unexpected geometry type " + type;
}

}  // namespace detail

inline std::string rfc7946_problem(const nlohmann::json& fc) {
  if (!fc.is_object() || fc.value("type", "") != "FeatureCollection") return "not a FeatureCollection";
  if (!fc.contains("features") || !fc["features"].is_array()) return "features must be an array";
  for (const auto& f : fc["features"]) {
    if (!f.is_object() || f.value("type", "") != "Feature") return "member is not a Feature";
    if (!f.contains("geometry")) return "feature lacks geometry";
    if (!f.contains("properties") || !(f["properties"].is_object() || f["properties"].is_null())) {
      return "feature properties must be an object or null";
    }
    if (auto e = detail::check_geometry(f["geometry"]); !e.empty()) return e;
  }
  return "";
}

}  // namespace htwin::test
