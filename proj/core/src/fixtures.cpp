#include "htwin/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "htwin/error.hpp"
#include "htwin/flowsim.hpp"
#include "htwin/types.hpp"

namespace htwin {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr GeoPoint kOrigin{-38.5100, -12.9720};
constexpr double kCellW = 80.0;
constexpr double kCellH = 60.0;

const char* const kZoneNames[] = {"Terreiro de Jesus",     "Largo do Pelourinho",  "Praca da Se",
                                  "Cruzeiro de Sao Francisco", "Largo do Carmo",   "Rua Gregorio de Mattos",
                                  "Praca Tome de Souza",   "Largo de Santo Antonio", "Rua Chile",
                                  "Baixa dos Sapateiros",  "Ladeira da Misericordia", "Praca Anchieta"};

double round6(double v) { return std::round(v * 1e6) / 1e6; }

GeoPoint quantized(LocalPoint p) {
  const GeoPoint g = from_local(p, kOrigin);
  return {round6(g.lon), round6(g.lat)};
}

struct Grid {
  std::size_t n, cols, rows;
  explicit Grid(std::size_t count) : n(count) {
    cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(count))));
    rows = (count + cols - 1) / cols;
  }
  // South-west corner of cell i in local metres; row 0 is the northern row.
  LocalPoint corner(std::size_t i) const {
    const double col = static_cast<double>(i % cols);
    const double row = static_cast<double>(i / cols);
    return {(col - cols / 2.0) * kCellW, (rows / 2.0 - row - 1.0) * kCellH};
  }
  GeoPoint at(std::size_t i, double fx, double fy) const {
    const LocalPoint c = corner(i);
    return quantized({c.x + fx * kCellW, c.y + fy * kCellH});
  }
  std::vector<GeoPoint> ring(std::size_t i) const {
    return {at(i, 0, 0), at(i, 1, 0), at(i, 1, 1), at(i, 0, 1), at(i, 0, 0)};
  }
};

double normal(CounterRng& rng) {
  const double u1 = 1.0 - rng.next_double();
  const double u2 = rng.next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

json point(GeoPoint p) { return {{"type", "Point"}, {"coordinates", {p.lon, p.lat}}}; }

struct SensorPlan {
  std::string id;
  std::size_t zone;
  Metric metric;
  SourceKind source;
  GeoPoint location;
};

struct Line {
  std::int64_t t;
  std::string sensor;
  std::size_t seq;
  std::string text;
};

std::string node_id(std::size_t zone, std::size_t n) { return "N" + fixture_zone_id(zone, n); }

std::string edge_id(std::size_t a, std::size_t b, std::size_t n) {
  return "E" + fixture_zone_id(a, n) + "-" + fixture_zone_id(b, n);
}

std::vector<std::pair<std::size_t, std::size_t>> grid_links(const Grid& g) {
  std::vector<std::pair<std::size_t, std::size_t>> links;
  for (std::size_t i = 0; i < g.n; ++i) {
    if ((i % g.cols) + 1 < g.cols && i + 1 < g.n) links.emplace_back(i, i + 1);
    if (i + g.cols < g.n) links.emplace_back(i, i + g.cols);
  }
  return links;
}

std::vector<std::size_t> gateway_zones(const Grid& g) {
  std::vector<std::size_t> gw{0};
  if (g.cols - 1 < g.n && g.cols > 1) gw.push_back(g.cols - 1);
  if (g.n - 1 != gw.back()) gw.push_back(g.n - 1);
  return gw;
}

}  // namespace

std::string fixture_zone_id(std::size_t index, std::size_t zone_count) {
  const int width = std::max<int>(2, static_cast<int>(std::to_string(zone_count).size()));
  char buf[32];
  std::snprintf(buf, sizeof buf, "Z%0*zu", width, index + 1);
  return buf;
}

FixtureSet generate_fixtures(const FixtureOptions& opt) {
  if (opt.zones == 0 || opt.days == 0) throw Error(Errc::InvalidArgument, "zones and days must be positive");
  const Grid grid(opt.zones);
  const std::size_t n = opt.zones;
  FixtureSet out;

  // Zones.
  json features = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    json ring = json::array();
    for (const auto& p : grid.ring(i)) ring.push_back({p.lon, p.lat});
    const std::string name = i < std::size(kZoneNames) ? kZoneNames[i] : "Zone " + std::to_string(i + 1);
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "Polygon"}, {"coordinates", json::array({ring})}}},
                        {"properties", {{"id", fixture_zone_id(i, n)}, {"name", name}, {"tags", json::object()}}}});
  }
  out.zones = {{"type", "FeatureCollection"}, {"features", features}};

  // Street graph: one node per zone centre, edges between grid neighbours.
  const auto gateways = gateway_zones(grid);
  json gfeatures = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    const bool gw = std::find(gateways.begin(), gateways.end(), i) != gateways.end();
    gfeatures.push_back({{"type", "Feature"},
                         {"geometry", point(grid.at(i, 0.5, 0.5))},
                         {"properties", {{"id", node_id(i, n)}, {"zone", fixture_zone_id(i, n)}, {"gateway", gw}}}});
  }
  for (const auto& [a, b] : grid_links(grid)) {
    const GeoPoint pa = grid.at(a, 0.5, 0.5);
    const GeoPoint pb = grid.at(b, 0.5, 0.5);
    // Walking minutes at 1.2 m/s.
    const double cost = std::round(distance_m(pa, pb, kOrigin) / 1.2 / 60.0 * 1000.0) / 1000.0;
    gfeatures.push_back(
        {{"type", "Feature"},
         {"geometry", {{"type", "LineString"}, {"coordinates", {{pa.lon, pa.lat}, {pb.lon, pb.lat}}}}},
         {"properties", {{"id", edge_id(a, b, n)}, {"a", node_id(a, n)}, {"b", node_id(b, n)}, {"walk_cost", cost}}}});
  }
  out.graph = {{"type", "FeatureCollection"}, {"features", gfeatures}};

  // Registry.
  std::vector<SensorPlan> people, env;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string z = fixture_zone_id(i, n);
    people.push_back({"CAM-" + z, i, Metric::CameraCount, SourceKind::Camera, grid.at(i, 0.3, 0.5)});
    people.push_back({"WIFI-" + z, i, Metric::WifiCount, SourceKind::WifiBt, grid.at(i, 0.7, 0.5)});
    if (i % 3 == 0) people.push_back({"STAT-" + z, i, Metric::StatEstimate, SourceKind::Statistical, grid.at(i, 0.5, 0.3)});
    env.push_back({"TMP-" + z, i, Metric::TemperatureC, SourceKind::Environmental, grid.at(i, 0.2, 0.2)});
    env.push_back({"HUM-" + z, i, Metric::HumidityPct, SourceKind::Environmental, grid.at(i, 0.8, 0.2)});
    env.push_back({"NOI-" + z, i, Metric::NoiseDb, SourceKind::Environmental, grid.at(i, 0.5, 0.8)});
  }
  std::vector<SensorPlan> all = people;
  all.insert(all.end(), env.begin(), env.end());
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  out.registry = json::array();
  for (const auto& s : all) {
    json e = {{"sensor_id", s.id},
              {"lon", s.location.lon},
              {"lat", s.location.lat},
              {"metric", to_string(s.metric)},
              {"source_kind", to_string(s.source)}};
    if (s.source == SourceKind::Statistical) e["variance_persons2"] = 400.0;
    out.registry.push_back(e);
  }

  // Heritage assets in every other zone.
  static const char* const kCategories[] = {"church", "museum", "square", "monument", "building"};
  out.assets = json::array();
  for (std::size_t i = 0; i < n; i += 2) {
    const GeoPoint p = grid.at(i, 0.5, 0.65);
    out.assets.push_back({{"asset_id", "A-" + fixture_zone_id(i, n)},
                          {"name", "Heritage site " + fixture_zone_id(i, n)},
                          {"category", kCategories[(i / 2) % std::size(kCategories)]},
                          {"condition_note", (i / 2) % 3 == 0 ? "facade restoration pending" : "good"},
                          {"lon", p.lon},
                          {"lat", p.lat}});
  }

  // Readings.
  const std::int64_t start = to_unix(opt.start);
  const std::int64_t span = static_cast<std::int64_t>(opt.days) * 86400;
  const std::size_t people_bins = static_cast<std::size_t>(span / 300);
  const std::size_t people_lines = people.size() * people_bins;
  if (opt.readings < people_lines + env.size()) {
    throw Error(Errc::InvalidArgument, "reading budget " + std::to_string(opt.readings) + " is below the " +
                                           std::to_string(people_lines + env.size()) +
                                           " lines the people-count series need");
  }

  std::vector<double> base(n);
  {
    CounterRng rng(opt.seed, 1, 0);
    for (auto& b : base) b = 0.1 + 0.6 * rng.next_double();
  }
  const std::size_t event_zone = n > 1 ? 1 : 0;
  auto density = [&](std::size_t zone, std::int64_t t) {
    const double hour = static_cast<double>((t - start) % 86400) / 3600.0;
    const double diurnal = (hour >= 7.0 && hour <= 21.0) ? 0.2 + 0.8 * std::sin(std::numbers::pi * (hour - 7.0) / 14.0)
                                                          : 0.2;
    double d = base[zone] * diurnal;
    if (zone == event_zone && hour >= 11.0 && hour < 13.0) d += 2.4;
    return d;
  };
  const double area = zone_area(grid.ring(0), kOrigin);

  std::vector<Line> lines;
  lines.reserve(opt.readings);
  auto emit = [&](const SensorPlan& s, std::size_t seq, std::int64_t t, double value, CounterRng& rng) {
    const double u = rng.next_double();
    if (seq > 0 && u < 0.003 && !lines.empty() && lines.back().sensor == s.id) {
      Line dup = lines.back();
      dup.seq = seq;
      lines.push_back(std::move(dup));
      return;
    }
    const std::string rid = s.id + "-" + std::to_string(seq);
    json rec = {{"reading_id", rid},
                {"sensor_id", s.id},
                {"metric", to_string(s.metric)},
                {"value", value},
                {"timestamp", format_rfc3339(from_unix(t))}};
    if (rng.next_double() >= 0.1) {
      rec["lon"] = s.location.lon;
      rec["lat"] = s.location.lat;
    }
    std::string text;
    const double bad = rng.next_double();
    if (bad < 0.001) {
      text = rec.dump();
      text.resize(text.size() / 2);  // truncated record
    } else if (bad < 0.002) {
      rec["sensor_id"] = "GHOST-" + std::to_string(seq);
      rec.erase("lon");
      rec.erase("lat");
      text = rec.dump();
    } else if (bad < 0.003) {
      rec["timestamp"] = "2024-13-45T99:00:00Z";
      text = rec.dump();
    } else if (bad < 0.004) {
      rec["lon"] = s.location.lon + 0.05;
      rec["lat"] = s.location.lat;
      text = rec.dump();
    } else if (bad < 0.005 && s.metric == Metric::TemperatureC) {
      rec["value"] = 99.0;
      text = rec.dump();
    } else {
      text = rec.dump();
    }
    lines.push_back({t, s.id, seq, std::move(text)});
  };

  for (std::size_t si = 0; si < people.size(); ++si) {
    const auto& s = people[si];
    const double rel = s.source == SourceKind::Camera ? 0.05 : s.source == SourceKind::WifiBt ? 0.10 : 0.20;
    for (std::size_t b = 0; b < people_bins; ++b) {
      CounterRng rng(opt.seed, 2 + b, si);
      const std::int64_t t = start + static_cast<std::int64_t>(b) * 300 + static_cast<std::int64_t>(si % 60);
      const double persons = density(s.zone, t) * area;
      const double v = std::max(0.0, std::round(persons * (1.0 + rel * normal(rng))));
      emit(s, b, t, v, rng);
    }
  }

  const std::size_t env_budget = opt.readings - people_lines;
  for (std::size_t si = 0; si < env.size(); ++si) {
    const auto& s = env[si];
    const std::size_t count = env_budget / env.size() + (si < env_budget % env.size() ? 1 : 0);
    const double heat = (s.zone % 4 == 1) ? 1.5 : 0.0;
    for (std::size_t j = 0; j < count; ++j) {
      CounterRng rng(opt.seed, 1'000'000 + j, si);
      const std::int64_t t =
          start + static_cast<std::int64_t>((static_cast<double>(j) * static_cast<double>(span)) / count) +
          static_cast<std::int64_t>(si % 7);
      const double hour = static_cast<double>((t - start) % 86400) / 3600.0;
      const double diurnal = std::sin(2.0 * std::numbers::pi * (hour - 9.0) / 24.0);
      double v = 0.0;
      switch (s.metric) {
        case Metric::TemperatureC:
          v = 26.0 + 4.0 * diurnal + heat + 0.3 * normal(rng);
          if (rng.next_double() < 0.002) v += 12.0;  // spike for the outlier filter
          break;
        case Metric::HumidityPct:
          v = std::clamp(75.0 - 10.0 * diurnal + 2.0 * normal(rng), 0.0, 100.0);
          break;
        default:
          v = std::clamp(45.0 + 8.0 * std::log10(1.0 + density(s.zone, t) * area / 50.0) + normal(rng), 20.0, 140.0);
          break;
      }
      emit(s, j, t, std::round(v * 100.0) / 100.0, rng);
    }
  }

  std::stable_sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.sensor != b.sensor) return a.sensor < b.sensor;
    return a.seq < b.seq;
  });
  out.readings.reserve(lines.size() * 190);
  for (const auto& l : lines) {
    out.readings += l.text;
    out.readings += '\n';
  }

  // Scenarios.
  json arrivals = json::object();
  for (auto g : gateways) arrivals[node_id(g, n)] = 25.0;
  json initial = json::object();
  for (std::size_t i = 0; i < n; ++i) initial[fixture_zone_id(i, n)] = 200.0;
  const json params = {{"steps", 288}, {"seed", opt.seed}, {"gateway_arrival_rate", arrivals},
                       {"initial_population", initial}};
  out.scenarios.emplace_back("baseline", json{{"name", "baseline"}, {"overlays", json::array()}, {"params", params}});
  json overlays = json::array();
  overlays.push_back({{"type", "event"}, {"zone", fixture_zone_id(event_zone, n)}, {"multiplier", 4.0},
                      {"window", {132, 156}}});
  if (const auto links = grid_links(grid); !links.empty()) {
    overlays.push_back({{"type", "close_edge"}, {"edge", edge_id(links.back().first, links.back().second, n)},
                        {"window", {0, 288}}});
  }
  overlays.push_back({{"type", "season"}, {"multiplier", 1.2}});
  out.scenarios.emplace_back("event", json{{"name", "event"}, {"overlays", overlays}, {"params", params}});

  out.config_toml =
      "# Synthetic historic-centre fixture.\n"
      "listen = \"127.0.0.1:8080\"\n"
      "bin_width = 300\n"
      "tau = 2.0\n"
      "k = 3\n"
      "reference_zone = \"" + fixture_zone_id(0, n) + "\"\n"
      "workers = 2\n"
      "data_dir = \".\"\n"
      "zones = \"zones.geojson\"\n"
      "graph = \"graph.geojson\"\n"
      "registry = \"registry.json\"\n"
      "assets = \"assets.json\"\n"
      "\n[variances]\n"
      "camera = 25.0\n"
      "wifi_bt = 100.0\n"
      "statistical = 400.0\n";
  return out;
}

void FixtureSet::write(const fs::path& dir) const {
  std::error_code ec;
  fs::create_directories(dir / "scenarios", ec);
  if (ec) throw Error(Errc::Io, "cannot create " + dir.string() + ": " + ec.message());
  auto put = [](const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f << text;
    if (!f) throw Error(Errc::Io, "cannot write " + p.string());
  };
  put(dir / "zones.geojson", zones.dump(1) + "\n");
  put(dir / "graph.geojson", graph.dump(1) + "\n");
  put(dir / "registry.json", registry.dump(1) + "\n");
  put(dir / "assets.json", assets.dump(1) + "\n");
  put(dir / "readings.ndjson", readings);
  put(dir / "heritage_twin.toml", config_toml);
  for (const auto& [name, doc] : scenarios) put(dir / "scenarios" / (name + ".json"), doc.dump(2) + "\n");
}

SyntheticNetwork random_network(std::size_t zone_count, std::uint64_t seed) {
  if (zone_count < 2) throw Error(Errc::InvalidArgument, "a network needs at least two zones");
  const Grid grid(zone_count);
  std::vector<Zone> zones;
  zones.reserve(zone_count);
  for (std::size_t i = 0; i < zone_count; ++i) {
    zones.emplace_back(fixture_zone_id(i, zone_count), "Zone " + std::to_string(i + 1), grid.ring(i), kOrigin);
  }
  SyntheticNetwork net{ZoneSet(std::move(zones), kOrigin), {}};

  const auto gateways = gateway_zones(grid);
  std::vector<GraphNode> nodes;
  for (std::size_t i = 0; i < zone_count; ++i) {
    const bool gw = std::find(gateways.begin(), gateways.end(), i) != gateways.end();
    nodes.push_back({node_id(i, zone_count), grid.at(i, 0.5, 0.5), fixture_zone_id(i, zone_count), gw});
  }
  CounterRng rng(seed, 7, 7);
  auto links = grid_links(grid);
  for (std::size_t extra = 0; extra < zone_count / 2; ++extra) {
    const auto a = static_cast<std::size_t>(rng.next_u64() % zone_count);
    const auto b = static_cast<std::size_t>(rng.next_u64() % zone_count);
    if (a != b) links.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::vector<GraphEdge> edges;
  for (std::size_t e = 0; e < links.size(); ++e) {
    const auto [a, b] = links[e];
    const double length = distance_m(nodes[a].point, nodes[b].point, kOrigin);
    char id[48];
    std::snprintf(id, sizeof id, "E%05zu", e);
    edges.push_back({id, nodes[a].id, nodes[b].id, length, 0.5 + 4.5 * rng.next_double()});
  }
  net.graph = StreetGraph(std::move(nodes), std::move(edges), net.zones);
  return net;
}

}  // namespace htwin
