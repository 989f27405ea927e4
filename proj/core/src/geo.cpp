#include "htwin/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "htwin/error.hpp"

namespace htwin {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
// Boundary tolerance in metres for the closed-region convention.
constexpr double kOnEdgeEpsM = 1e-6;

double cross(LocalPoint o, LocalPoint a, LocalPoint b) noexcept {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double signed_shoelace(std::span<const LocalPoint> closed) noexcept {
  double twice = 0.0;
  for (std::size_t i = 0; i + 1 < closed.size(); ++i) {
    twice += closed[i].x * closed[i + 1].y - closed[i + 1].x * closed[i].y;
  }
  return 0.5 * twice;
}

bool on_segment(LocalPoint p, LocalPoint a, LocalPoint b) noexcept {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
  const double ex = a.x + t * dx - p.x;
  const double ey = a.y + t * dy - p.y;
  return ex * ex + ey * ey <= kOnEdgeEpsM * kOnEdgeEpsM;
}

int sign(double v) noexcept { return (v > 1e-12) - (v < -1e-12); }

bool segments_intersect(LocalPoint p1, LocalPoint p2, LocalPoint q1, LocalPoint q2) noexcept {
  const int d1 = sign(cross(q1, q2, p1));
  const int d2 = sign(cross(q1, q2, p2));
  const int d3 = sign(cross(p1, p2, q1));
  const int d4 = sign(cross(p1, p2, q2));
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  return (d1 == 0 && on_segment(p1, q1, q2)) || (d2 == 0 && on_segment(p2, q1, q2)) ||
         (d3 == 0 && on_segment(q1, p1, p2)) || (d4 == 0 && on_segment(q2, p1, p2));
}

// Drops repeated consecutive vertices and closes the ring.
std::vector<GeoPoint> normalize_ring(std::vector<GeoPoint> ring) {
  std::vector<GeoPoint> out;
  out.reserve(ring.size() + 1);
  for (const auto& p : ring) {
    if (out.empty() || !(out.back() == p)) out.push_back(p);
  }
  while (out.size() > 1 && out.front() == out.back()) out.pop_back();
  if (!out.empty()) out.push_back(out.front());
  return out;
}

std::vector<LocalPoint> project(std::span<const GeoPoint> ring, GeoPoint origin) {
  std::vector<LocalPoint> out;
  out.reserve(ring.size());
  for (const auto& p : ring) out.push_back(to_local(p, origin));
  return out;
}

bool ring_contains(std::span<const LocalPoint> closed, LocalPoint p) noexcept {
  bool inside = false;
  for (std::size_t i = 0, j = closed.size() - 2; i + 1 < closed.size(); j = i++) {
    const LocalPoint a = closed[i];
    const LocalPoint b = closed[j];
    if (on_segment(p, a, b)) return true;
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

}  // namespace

bool GeoPoint::valid() const noexcept {
  return std::isfinite(lon) && std::isfinite(lat) && lon >= -180.0 && lon <= 180.0 &&
         lat >= -90.0 && lat <= 90.0;
}

LocalPoint to_local(GeoPoint p, GeoPoint origin) noexcept {
  const double x = kEarthRadiusM * (p.lon - origin.lon) * kDegToRad * std::cos(origin.lat * kDegToRad);
  const double y = kEarthRadiusM * (p.lat - origin.lat) * kDegToRad;
  return {x, y};
}

GeoPoint from_local(LocalPoint p, GeoPoint origin) noexcept {
  const double lon = origin.lon + p.x / (kEarthRadiusM * std::cos(origin.lat * kDegToRad)) * kRadToDeg;
  const double lat = origin.lat + p.y / kEarthRadiusM * kRadToDeg;
  return {lon, lat};
}

double distance_m(GeoPoint a, GeoPoint b, GeoPoint origin) noexcept {
  const LocalPoint la = to_local(a, origin);
  const LocalPoint lb = to_local(b, origin);
  return std::hypot(la.x - lb.x, la.y - lb.y);
}

double zone_area(std::span<const GeoPoint> ring, GeoPoint origin) {
  const auto closed = normalize_ring({ring.begin(), ring.end()});
  if (closed.size() < 4) throw Error(Errc::DegenerateRing, "ring needs at least 3 distinct vertices");
  const auto local = project(closed, origin);
  return std::abs(signed_shoelace(local));
}

Zone::Zone(ZoneId id, std::string name, std::vector<GeoPoint> ring, GeoPoint origin,
           std::map<std::string, std::string> tags)
    : id_(std::move(id)), name_(std::move(name)), tags_(std::move(tags)), origin_(origin) {
  for (const auto& p : ring) {
    if (!p.valid()) throw Error(Errc::InvalidGeometry, "zone " + id_ + " has an invalid coordinate");
  }
  ring_ = normalize_ring(std::move(ring));
  if (ring_.size() < 4) {
    throw Error(Errc::DegenerateRing, "zone " + id_ + " needs at least 3 distinct vertices");
  }
  local_ = project(ring_, origin_);

  const std::size_t n = local_.size() - 1;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(local_[i], local_[i + 1], local_[j], local_[j + 1])) {
        throw Error(Errc::SelfIntersectingRing, "zone " + id_ + " ring crosses itself");
      }
    }
  }

  signed_area_ = signed_shoelace(local_);
  area_m2_ = std::abs(signed_area_);
  if (!(area_m2_ > 0.0)) throw Error(Errc::DegenerateRing, "zone " + id_ + " has zero area");

  bbox_ = {local_[0].x, local_[0].y, local_[0].x, local_[0].y};
  for (const auto& p : local_) {
    bbox_.min_x = std::min(bbox_.min_x, p.x);
    bbox_.min_y = std::min(bbox_.min_y, p.y);
    bbox_.max_x = std::max(bbox_.max_x, p.x);
    bbox_.max_y = std::max(bbox_.max_y, p.y);
  }
}

GeoPoint Zone::centroid() const noexcept {
  double cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i + 1 < local_.size(); ++i) {
    const double f = local_[i].x * local_[i + 1].y - local_[i + 1].x * local_[i].y;
    cx += (local_[i].x + local_[i + 1].x) * f;
    cy += (local_[i].y + local_[i + 1].y) * f;
  }
  const double k = 1.0 / (6.0 * signed_area_);
  return from_local({cx * k, cy * k}, origin_);
}

bool Zone::contains_local(LocalPoint p) const noexcept {
  if (p.x < bbox_.min_x - kOnEdgeEpsM || p.x > bbox_.max_x + kOnEdgeEpsM ||
      p.y < bbox_.min_y - kOnEdgeEpsM || p.y > bbox_.max_y + kOnEdgeEpsM) {
    return false;
  }
  return ring_contains(local_, p);
}

bool Zone::contains(GeoPoint p) const noexcept { return contains_local(to_local(p, origin_)); }

bool point_in_zone(GeoPoint p, const Zone& z) noexcept { return z.contains(p); }

ZoneSet::ZoneSet(std::vector<Zone> zones, GeoPoint origin) : zones_(std::move(zones)), origin_(origin) {
  std::sort(zones_.begin(), zones_.end(), [](const Zone& a, const Zone& b) { return a.id() < b.id(); });
  for (std::size_t i = 1; i < zones_.size(); ++i) {
    if (zones_[i].id() == zones_[i - 1].id()) {
      throw Error(Errc::DuplicateZone, "zone id " + zones_[i].id() + " appears twice");
    }
  }

  double edge = 0.0;
  for (const auto& z : zones_) {
    edge = std::max({edge, z.bbox().max_x - z.bbox().min_x, z.bbox().max_y - z.bbox().min_y});
  }
  cell_size_ = edge > 0.0 ? edge : 1.0;

  for (std::size_t i = 0; i < zones_.size(); ++i) {
    // Bounding boxes are computed in each zone's own projection; re-project
    // against the set origin so every zone shares one grid frame.
    BBox box{};
    bool first = true;
    for (const auto& g : zones_[i].ring()) {
      const LocalPoint p = to_local(g, origin_);
      if (first) {
        box = {p.x, p.y, p.x, p.y};
        first = false;
      }
      box.min_x = std::min(box.min_x, p.x);
      box.min_y = std::min(box.min_y, p.y);
      box.max_x = std::max(box.max_x, p.x);
      box.max_y = std::max(box.max_y, p.y);
    }
    const Cell lo = cell_of({box.min_x - kOnEdgeEpsM, box.min_y - kOnEdgeEpsM});
    const Cell hi = cell_of({box.max_x + kOnEdgeEpsM, box.max_y + kOnEdgeEpsM});
    for (long long ix = lo.ix; ix <= hi.ix; ++ix) {
      for (long long iy = lo.iy; iy <= hi.iy; ++iy) grid_[Cell{ix, iy}].push_back(i);
    }
  }
}

ZoneSet::Cell ZoneSet::cell_of(LocalPoint p) const noexcept {
  return {static_cast<long long>(std::floor(p.x / cell_size_)),
          static_cast<long long>(std::floor(p.y / cell_size_))};
}

const Zone* ZoneSet::find(const ZoneId& id) const noexcept {
  auto it = std::lower_bound(zones_.begin(), zones_.end(), id,
                             [](const Zone& z, const ZoneId& key) { return z.id() < key; });
  return it != zones_.end() && it->id() == id ? &*it : nullptr;
}

const Zone& ZoneSet::at(const ZoneId& id) const {
  if (const Zone* z = find(id)) return *z;
  throw Error(Errc::UnknownZone, "unknown zone '" + id + "'");
}

std::optional<ZoneId> ZoneSet::locate(GeoPoint p) const {
  if (zones_.empty()) return std::nullopt;
  auto it = grid_.find(cell_of(to_local(p, origin_)));
  if (it == grid_.end()) return std::nullopt;
  // Cell lists are filled in id order, so the first hit is the smallest id.
  for (std::size_t idx : it->second) {
    if (zones_[idx].contains(p)) return zones_[idx].id();
  }
  return std::nullopt;
}

std::optional<ZoneId> ZoneSet::locate_linear(GeoPoint p) const {
  for (const auto& z : zones_) {
    if (point_in_zone(p, z)) return z.id();
  }
  return std::nullopt;
}

StreetGraph::StreetGraph(std::vector<GraphNode> nodes, std::vector<GraphEdge> edges,
                         const ZoneSet& zones)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  std::sort(nodes_.begin(), nodes_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  std::sort(edges_.begin(), edges_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (!node_index_.emplace(n.id, i).second) {
      throw Error(Errc::InvalidGeometry, "node id " + n.id + " appears twice");
    }
    if (!zones.contains(n.zone)) {
      throw Error(Errc::UnknownZone, "node " + n.id + " references unknown zone '" + n.zone + "'");
    }
  }
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const auto& e = edges_[i];
    if (!edge_index_.emplace(e.id, i).second) {
      throw Error(Errc::InvalidGeometry, "edge id " + e.id + " appears twice");
    }
    if (!node_index_.contains(e.a) || !node_index_.contains(e.b)) {
      throw Error(Errc::UnknownNode, "edge " + e.id + " references a missing node");
    }
    if (!(e.length_m > 0.0)) throw Error(Errc::InvalidGeometry, "edge " + e.id + " has non-positive length");
    if (!(e.walk_cost >= 0.0) || !std::isfinite(e.walk_cost)) {
      throw Error(Errc::InvalidGeometry, "edge " + e.id + " has negative walk cost");
    }
  }
  for (const auto& z : zones.zones()) zone_ids_.push_back(z.id());
}

const GraphNode* StreetGraph::find_node(const NodeId& id) const noexcept {
  auto it = node_index_.find(id);
  return it == node_index_.end() ? nullptr : &nodes_[it->second];
}

const GraphEdge* StreetGraph::find_edge(const EdgeId& id) const noexcept {
  auto it = edge_index_.find(id);
  return it == edge_index_.end() ? nullptr : &edges_[it->second];
}

std::optional<std::size_t> StreetGraph::edge_index(const EdgeId& id) const noexcept {
  auto it = edge_index_.find(id);
  if (it == edge_index_.end()) return std::nullopt;
  return it->second;
}

std::vector<ZoneLink> StreetGraph::neighbors(const ZoneId& zone, std::span<const bool> edge_open) const {
  if (!std::binary_search(zone_ids_.begin(), zone_ids_.end(), zone)) {
    throw Error(Errc::UnknownZone, "unknown zone '" + zone + "'");
  }
  std::map<ZoneId, ZoneLink> best;
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    if (!edge_open.empty() && !edge_open[i]) continue;
    const auto& e = edges_[i];
    const ZoneId& za = nodes_[node_index_.at(e.a)].zone;
    const ZoneId& zb = nodes_[node_index_.at(e.b)].zone;
    const ZoneId* other = nullptr;
    if (za == zone && zb != zone) other = &zb;
    if (zb == zone && za != zone) other = &za;
    if (!other) continue;
    auto [it, inserted] = best.try_emplace(*other, ZoneLink{*other, e.walk_cost, e.id});
    // Edges are visited in id order, so strict < keeps the smallest id on ties.
    if (!inserted && e.walk_cost < it->second.cost) it->second = ZoneLink{*other, e.walk_cost, e.id};
  }
  std::vector<ZoneLink> out;
  out.reserve(best.size());
  for (auto& [_, link] : best) out.push_back(std::move(link));
  return out;
}

}  // namespace htwin
