#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace htwin {

/// WGS84 position in degrees. GeoJSON order: [lon, lat].
struct GeoPoint {
  double lon = 0.0;
  double lat = 0.0;

  bool valid() const noexcept;
  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Planar metres east/north of a projection origin.
struct LocalPoint {
  double x = 0.0;
  double y = 0.0;
};

inline constexpr double kEarthRadiusM = 6371008.8;

// Equirectangular projection around `origin`. Adequate for a district of a
// few kilometres; error grows with distance from the origin.
LocalPoint to_local(GeoPoint p, GeoPoint origin) noexcept;
GeoPoint from_local(LocalPoint p, GeoPoint origin) noexcept;

double distance_m(GeoPoint a, GeoPoint b, GeoPoint origin) noexcept;

using ZoneId = std::string;

struct BBox {
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;
  bool contains(LocalPoint p) const noexcept {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }
};

class Zone {
 public:
  /// Normalizes the ring (closes it), validates it and caches planar data.
  /// Throws Error(DegenerateRing | SelfIntersectingRing | InvalidGeometry).
  Zone(ZoneId id, std::string name, std::vector<GeoPoint> ring, GeoPoint origin,
       std::map<std::string, std::string> tags = {});

  const ZoneId& id() const noexcept { return id_; }
  const std::string& name() const noexcept { return name_; }
  /// Closed ring: front() == back().
  const std::vector<GeoPoint>& ring() const noexcept { return ring_; }
  const std::map<std::string, std::string>& tags() const noexcept { return tags_; }
  double area_m2() const noexcept { return area_m2_; }
  const BBox& bbox() const noexcept { return bbox_; }
  GeoPoint origin() const noexcept { return origin_; }
  /// Area centroid in geographic coordinates.
  GeoPoint centroid() const noexcept;
  /// True when the ring as stored runs counterclockwise.
  bool counterclockwise() const noexcept { return signed_area_ > 0.0; }

  bool contains(GeoPoint p) const noexcept;
  bool contains_local(LocalPoint p) const noexcept;

 private:
  ZoneId id_;
  std::string name_;
  std::vector<GeoPoint> ring_;
  std::vector<LocalPoint> local_;
  std::map<std::string, std::string> tags_;
  GeoPoint origin_;
  BBox bbox_;
  double signed_area_ = 0.0;
  double area_m2_ = 0.0;
};

/// Shoelace area of the ring projected around `origin`; orientation-free.
/// Throws Error(DegenerateRing) when fewer than three distinct vertices.
double zone_area(std::span<const GeoPoint> ring, GeoPoint origin);
inline double zone_area(const Zone& z) { return z.area_m2(); }

/// Ray casting with closed-region semantics: boundary points are inside.
bool point_in_zone(GeoPoint p, const Zone& z) noexcept;

/// Immutable set of zones with a uniform-grid lookup index.
class ZoneSet {
 public:
  ZoneSet() = default;
  /// Throws Error(DuplicateZone) on repeated ids.
  ZoneSet(std::vector<Zone> zones, GeoPoint origin);

  GeoPoint origin() const noexcept { return origin_; }
  /// Sorted by id.
  const std::vector<Zone>& zones() const noexcept { return zones_; }
  std::size_t size() const noexcept { return zones_.size(); }
  bool empty() const noexcept { return zones_.empty(); }

  const Zone* find(const ZoneId& id) const noexcept;
  const Zone& at(const ZoneId& id) const;  // Error(UnknownZone)
  bool contains(const ZoneId& id) const noexcept { return find(id) != nullptr; }

  /// Smallest id among the zones containing p; nullopt outside all zones.
  std::optional<ZoneId> locate(GeoPoint p) const;
  /// Exhaustive scan with the same tie-break; used as an index oracle.
  std::optional<ZoneId> locate_linear(GeoPoint p) const;

 private:
  struct Cell {
    long long ix;
    long long iy;
    friend bool operator==(const Cell&, const Cell&) = default;
  };
  struct CellHash {
    std::size_t operator()(const Cell& c) const noexcept {
      return std::hash<long long>{}(c.ix * 73856093LL ^ c.iy * 19349663LL);
    }
  };
  Cell cell_of(LocalPoint p) const noexcept;

  std::vector<Zone> zones_;
  GeoPoint origin_;
  double cell_size_ = 1.0;
  std::unordered_map<Cell, std::vector<std::size_t>, CellHash> grid_;
};

using NodeId = std::string;
using EdgeId = std::string;

struct GraphNode {
  NodeId id;
  GeoPoint point;
  ZoneId zone;
  bool is_gateway = false;
};

struct GraphEdge {
  EdgeId id;
  NodeId a;
  NodeId b;
  double length_m = 0.0;
  double walk_cost = 0.0;
};

struct ZoneLink {
  ZoneId zone;
  double cost = 0.0;
  /// Edge realizing the minimum cost (smallest id on ties).
  EdgeId via;
  friend bool operator==(const ZoneLink&, const ZoneLink&) = default;
};

/// Undirected walkable network; nodes and edges sorted by id.
class StreetGraph {
 public:
  StreetGraph() = default;
  /// Validates endpoints, lengths, costs and node zones against `zones`.
  StreetGraph(std::vector<GraphNode> nodes, std::vector<GraphEdge> edges, const ZoneSet& zones);

  const std::vector<GraphNode>& nodes() const noexcept { return nodes_; }
  const std::vector<GraphEdge>& edges() const noexcept { return edges_; }
  const GraphNode* find_node(const NodeId& id) const noexcept;
  const GraphEdge* find_edge(const EdgeId& id) const noexcept;
  std::optional<std::size_t> edge_index(const EdgeId& id) const noexcept;
  const std::vector<ZoneId>& zone_ids() const noexcept { return zone_ids_; }

  /// Zones reachable from `zone` over one open edge, sorted by zone id.
  /// `edge_open[i]` selects edges()[i]; an empty span means all open.
  /// Throws Error(UnknownZone).
  std::vector<ZoneLink> neighbors(const ZoneId& zone, std::span<const bool> edge_open = {}) const;

 private:
  std::vector<GraphNode> nodes_;
  std::vector<GraphEdge> edges_;
  std::vector<ZoneId> zone_ids_;
  std::unordered_map<NodeId, std::size_t> node_index_;
  std::unordered_map<EdgeId, std::size_t> edge_index_;
};

}  // namespace htwin
