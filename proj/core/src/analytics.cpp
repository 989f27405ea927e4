#include "htwin/analytics.hpp"

#include <algorithm>
#include <cmath>

#include "htwin/error.hpp"

namespace htwin {

using nlohmann::json;

namespace {

struct PeopleSeries {
  Metric metric;
  SourceKind source;
};

constexpr PeopleSeries kPeopleSeries[] = {
    {Metric::CameraCount, SourceKind::Camera},
    {Metric::WifiCount, SourceKind::WifiBt},
    {Metric::StatEstimate, SourceKind::Statistical},
};

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

FusedCount fuse_estimates(std::span<const PersonEstimate> estimates) {
  if (estimates.empty()) throw Error(Errc::NoEstimates, "density fusion needs at least one estimate");
  // Summing in a canonical order makes the result independent of input order
  // down to the last bit.
  std::vector<PersonEstimate> sorted(estimates.begin(), estimates.end());
  std::sort(sorted.begin(), sorted.end(), [](const PersonEstimate& a, const PersonEstimate& b) {
    if (a.variance != b.variance) return a.variance < b.variance;
    if (a.persons != b.persons) return a.persons < b.persons;
    return a.source < b.source;
  });
  double weight_sum = 0.0;
  double weighted = 0.0;
  double lo = sorted.front().persons, hi = lo;
  for (const auto& e : sorted) {
    lo = std::min(lo, e.persons);
    hi = std::max(hi, e.persons);
    if (!(e.variance > 0.0) || !std::isfinite(e.variance) || !std::isfinite(e.persons)) {
      throw Error(Errc::InvalidArgument, "estimates must be finite with positive variance");
    }
    const double w = 1.0 / e.variance;
    weight_sum += w;
    weighted += w * e.persons;
  }
  // A weighted mean lies inside the inputs and 1/sum(w) never exceeds the
  // smallest variance; the clamps only remove rounding.
  return {std::clamp(weighted / weight_sum, lo, hi), std::min(1.0 / weight_sum, sorted.front().variance)};
}

DensityEstimate fuse_density(const ZoneId& zone, Instant bin_start, std::span<const PersonEstimate> estimates,
                             double area_m2) {
  if (!(area_m2 > 0.0)) throw Error(Errc::InvalidArgument, "zone area must be positive");
  const FusedCount fused = fuse_estimates(estimates);
  DensityEstimate out;
  out.zone = zone;
  out.bin_start = bin_start;
  out.density = std::max(0.0, fused.persons / area_m2);
  out.variance = fused.variance / (area_m2 * area_m2);
  for (const auto& e : estimates) {
    if (std::find(out.contributing_sources.begin(), out.contributing_sources.end(), e.source) ==
        out.contributing_sources.end()) {
      out.contributing_sources.push_back(e.source);
    }
  }
  std::sort(out.contributing_sources.begin(), out.contributing_sources.end());
  return out;
}

DensityEstimate fuse_density(const ZoneSet& zones, const ZoneId& zone, Instant bin_start,
                             std::span<const PersonEstimate> estimates) {
  return fuse_density(zone, bin_start, estimates, zones.at(zone).area_m2());
}

std::vector<Hotspot> detect_hotspots(const ZoneId& zone, std::span<const DensityPoint> series, double tau, int k,
                                     BinWidth width) {
  if (!(tau > 0.0) || k < 1) throw Error(Errc::InvalidArgument, "hotspot detection needs tau > 0 and k >= 1");
  std::vector<Hotspot> out;
  std::size_t i = 0;
  while (i < series.size()) {
    if (series[i].density < tau) {
      ++i;
      continue;
    }
    std::size_t j = i;
    double peak = series[i].density;
    while (j + 1 < series.size() && series[j + 1].density >= tau &&
           series[j + 1].bin_start - series[j].bin_start == width.seconds()) {
      ++j;
      peak = std::max(peak, series[j].density);
    }
    if (j - i + 1 >= static_cast<std::size_t>(k)) out.push_back({zone, series[i].bin_start, series[j].bin_start, peak});
    i = j + 1;
  }
  return out;
}

std::optional<double> pearson(std::span<const std::pair<double, double>> pairs) {
  const std::size_t n = pairs.size();
  if (n < 3) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : pairs) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (const auto& [x, y] : pairs) {
    const double dx = x - mx;
    const double dy = y - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> pearson(std::span<const AlignedPair> pairs) {
  std::vector<std::pair<double, double>> xy;
  xy.reserve(pairs.size());
  for (const auto& p : pairs) xy.emplace_back(p.a, p.b);
  return pearson(xy);
}

namespace {

// Open-ended window bounds serialize as null.
json bound(Instant t) {
  if (t <= kBeginningOfTime || t >= kEndOfTime) return nullptr;
  return format_rfc3339(t);
}

}  // namespace

json CorrelationReport::to_json() const {
  return {{"zone", zone},
          {"metric_pair", {"density", to_string(metric)}},
          {"r", optional_number(r)},
          {"n", n},
          {"window", {{"from", bound(from)}, {"to", bound(to)}}}};
}

double aggregate_noise(std::span<const double> levels_db) {
  if (levels_db.empty()) throw Error(Errc::EmptyInput, "noise aggregation needs at least one level");
  std::vector<double> sorted(levels_db.begin(), levels_db.end());
  std::sort(sorted.begin(), sorted.end());
  double energy = 0.0;
  for (double l : sorted) energy += std::pow(10.0, l / 10.0);
  return std::max(10.0 * std::log10(energy), sorted.back());
}

double attenuate_noise(double level_db_at_ref, double distance_m) {
  const double d = std::max(distance_m, kNoiseReferenceDistanceM);
  return std::max(0.0, level_db_at_ref - 20.0 * std::log10(d / kNoiseReferenceDistanceM));
}

double propagate_noise(const NoiseSource& source, GeoPoint receiver, GeoPoint origin) {
  return attenuate_noise(source.level_db_at_ref, distance_m(source.location, receiver, origin));
}

json to_json(const Hotspot& h) {
  return {{"zone", h.zone},
          {"start", format_rfc3339(h.start)},
          {"end", format_rfc3339(h.end)},
          {"peak_density", h.peak_density}};
}

json to_json(const DensityEstimate& d) {
  json sources = json::array();
  for (auto s : d.contributing_sources) sources.push_back(to_string(s));
  return {{"zone", d.zone},
          {"bin_start", format_rfc3339(d.bin_start)},
          {"density", d.density},
          {"variance", d.variance},
          {"contributing_sources", std::move(sources)}};
}

json MonitorSnapshot::to_json() const {
  json list = json::array();
  for (const auto& z : zones) {
    list.push_back({{"zone", z.zone},
                    {"density_bin", z.density_bin ? json(format_rfc3339(*z.density_bin)) : json(nullptr)},
                    {"density", optional_number(z.density)},
                    {"density_variance", optional_number(z.density_variance)},
                    {"noise_db", optional_number(z.noise_db)},
                    {"temperature_c", optional_number(z.temperature_c)},
                    {"heat_island_dt", optional_number(z.heat_island_dt)},
                    {"hotspot_active", z.hotspot_active}});
  }
  return {{"at", format_rfc3339(at)}, {"zones", std::move(list)}};
}

Analyzer::Analyzer(const ZoneSet& zones, const SensorRegistry& registry, const Store& store, AnalyticsConfig config)
    : zones_(zones), registry_(registry), store_(store), config_(std::move(config)) {
  if (config_.reference_zone && !zones_.contains(*config_.reference_zone)) {
    throw Error(Errc::UnknownZone, "reference zone '" + *config_.reference_zone + "' is not a known zone");
  }
}

double Analyzer::source_variance(const ZoneId& zone, SourceKind source) const {
  const auto fallback = config_.default_variance.find(source);
  const double default_variance = fallback != config_.default_variance.end() ? fallback->second : 1.0;
  double sum = 0.0;
  std::size_t m = 0;
  for (const auto& e : registry_.entries()) {
    if (e.zone != zone || e.source != source) continue;
    sum += e.variance_persons2.value_or(default_variance);
    ++m;
  }
  if (m == 0) return default_variance;
  // Summed metrics add independent errors; averaged ones shrink them.
  if (source == SourceKind::Statistical) return sum / static_cast<double>(m * m);
  return sum;
}

std::vector<DensityEstimate> Analyzer::density_series(const ZoneId& zone, Instant from, Instant to) const {
  const double area = zones_.at(zone).area_m2();
  std::map<Instant, std::vector<PersonEstimate>> per_bin;
  for (const auto& ps : kPeopleSeries) {
    const double variance = source_variance(zone, ps.source);
    for (const auto& b : store_.query_range({zone, ps.metric, ps.source}, from, to)) {
      per_bin[b.bin_start].push_back({b.value, variance, ps.source});
    }
  }
  std::vector<DensityEstimate> out;
  out.reserve(per_bin.size());
  for (const auto& [start, estimates] : per_bin) out.push_back(fuse_density(zone, start, estimates, area));
  return out;
}

std::optional<DensityEstimate> Analyzer::density_at(const ZoneId& zone, Instant at) const {
  std::optional<Instant> latest;
  for (const auto& ps : kPeopleSeries) {
    if (auto b = store_.latest_at_or_before({zone, ps.metric, ps.source}, at)) {
      if (!latest || b->bin_start > *latest) latest = b->bin_start;
    }
  }
  if (!latest) return std::nullopt;
  auto one = density_series(zone, *latest, *latest + Seconds{1});
  if (one.empty()) return std::nullopt;
  return one.front();
}

std::vector<Hotspot> Analyzer::zone_hotspots(const ZoneId& zone, Instant from, Instant to) const {
  std::vector<DensityPoint> points;
  for (const auto& d : density_series(zone, from, to)) points.push_back({d.bin_start, d.density});
  return detect_hotspots(zone, points, config_.tau, config_.k, config_.bin_width);
}

std::vector<Hotspot> Analyzer::hotspots(Instant from, Instant to) const {
  if (from > to) throw Error(Errc::BadRange, "range start after end");
  std::vector<Hotspot> out;
  for (const auto& z : zones_.zones()) {
    auto hs = zone_hotspots(z.id(), from, to);
    out.insert(out.end(), hs.begin(), hs.end());
  }
  return out;
}

BinnedSeries Analyzer::environmental(const ZoneId& zone, Metric metric, Instant from, Instant to) const {
  return {config_.bin_width, store_.query_range({zone, metric, SourceKind::Environmental}, from, to)};
}

CorrelationReport Analyzer::correlation(const ZoneId& zone, Metric metric, Instant from, Instant to) const {
  if (metric != Metric::NoiseDb && metric != Metric::TemperatureC) {
    throw Error(Errc::InvalidArgument, "density can be correlated with noise_db or temperature_c only");
  }
  if (from > to) throw Error(Errc::BadRange, "range start after end");
  zones_.at(zone);
  BinnedSeries density{config_.bin_width, {}};
  for (const auto& d : density_series(zone, from, to)) density.bins.push_back({d.bin_start, d.density, 1});
  const auto pairs = align(density, environmental(zone, metric, from, to));
  return {zone, metric, pearson(pairs), pairs.size(), from, to};
}

std::vector<HeatIslandPoint> Analyzer::heat_island_index(const ZoneId& zone, Instant from, Instant to) const {
  if (!config_.reference_zone) throw Error(Errc::NoReferenceConfigured, "no reference zone configured");
  zones_.at(zone);
  if (from > to) throw Error(Errc::BadRange, "range start after end");
  const auto pairs = align(environmental(zone, Metric::TemperatureC, from, to),
                           environmental(*config_.reference_zone, Metric::TemperatureC, from, to));
  if (pairs.empty()) throw Error(Errc::NoOverlap, "zone and reference share no temperature bins");
  std::vector<HeatIslandPoint> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back({p.bin_start, p.a - p.b});
  return out;
}

ZoneStatus Analyzer::zone_status(const ZoneId& zone, Instant at) const {
  ZoneStatus s;
  s.zone = zone;
  if (auto d = density_at(zone, at)) {
    s.density_bin = d->bin_start;
    s.density = d->density;
    s.density_variance = d->variance;
  }
  if (auto b = store_.latest_at_or_before({zone, Metric::NoiseDb, SourceKind::Environmental}, at)) s.noise_db = b->value;
  if (auto b = store_.latest_at_or_before({zone, Metric::TemperatureC, SourceKind::Environmental}, at)) {
    s.temperature_c = b->value;
    if (config_.reference_zone) {
      const auto ref = store_.query_range({*config_.reference_zone, Metric::TemperatureC, SourceKind::Environmental},
                                          b->bin_start, b->bin_start + Seconds{1});
      if (!ref.empty()) s.heat_island_dt = b->value - ref.front().value;
    }
  }
  if (s.density_bin) {
    for (const auto& h : zone_hotspots(zone, kBeginningOfTime, at + Seconds{1})) {
      if (h.start <= at && at < h.end + config_.bin_width.seconds()) {
        s.hotspot_active = true;
        break;
      }
    }
  }
  return s;
}

MonitorSnapshot Analyzer::monitor_snapshot(Instant at) const {
  MonitorSnapshot snap;
  snap.at = at;
  for (const auto& z : zones_.zones()) snap.zones.push_back(zone_status(z.id(), at));
  return snap;
}

}  // namespace htwin
