#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "htwin/harmonize.hpp"
#include "htwin/ingest.hpp"
#include "htwin/store.hpp"
#include "htwin/types.hpp"
#include "json.hpp"

namespace htwin {

struct AnalyticsConfig {
  BinWidth bin_width{};
  /// Hotspot density threshold, persons per square metre.
  double tau = 2.0;
  /// Minimum hotspot run length in bins.
  int k = 3;
  std::optional<ZoneId> reference_zone;
  /// Per-bin person-count variance used when the registry declares none.
  std::map<SourceKind, double> default_variance{
      {SourceKind::Camera, 25.0}, {SourceKind::WifiBt, 100.0}, {SourceKind::Statistical, 400.0}};
};

// ---------------------------------------------------------------------------
// Density fusion

struct PersonEstimate {
  double persons = 0.0;
  double variance = 1.0;  // persons^2, strictly positive
  SourceKind source = SourceKind::Camera;
};

struct FusedCount {
  double persons = 0.0;
  double variance = 0.0;
};

/// Inverse-variance weighted mean of the estimates and its variance.
/// Throws Error(NoEstimates) when empty, Error(InvalidArgument) when a
/// variance is not strictly positive.
FusedCount fuse_estimates(std::span<const PersonEstimate> estimates);

struct DensityEstimate {
  ZoneId zone;
  Instant bin_start{};
  double density = 0.0;   // persons / m^2
  double variance = 0.0;  // (persons / m^2)^2
  std::vector<SourceKind> contributing_sources;
};

/// Fused count divided by the zone area (variance by area squared),
/// clamped at zero.
DensityEstimate fuse_density(const ZoneId& zone, Instant bin_start, std::span<const PersonEstimate> estimates,
                             double area_m2);
/// Throws Error(UnknownZone) in addition.
DensityEstimate fuse_density(const ZoneSet& zones, const ZoneId& zone, Instant bin_start,
                             std::span<const PersonEstimate> estimates);

// ---------------------------------------------------------------------------
// Hotspots

struct DensityPoint {
  Instant bin_start{};
  double density = 0.0;
};

struct Hotspot {
  ZoneId zone;
  Instant start{};
  Instant end{};  // inclusive bin_start
  double peak_density = 0.0;

  friend bool operator==(const Hotspot&, const Hotspot&) = default;
};

/// Maximal runs of consecutive bins (exactly one bin width apart) with
/// density >= tau and length >= k. `series` must be ascending.
std::vector<Hotspot> detect_hotspots(const ZoneId& zone, std::span<const DensityPoint> series, double tau, int k,
                                     BinWidth width);

// ---------------------------------------------------------------------------
// Correlation

/// Sample Pearson r; nullopt when n < 3 or either variance is zero.
std::optional<double> pearson(std::span<const std::pair<double, double>> pairs);
std::optional<double> pearson(std::span<const AlignedPair> pairs);

struct CorrelationReport {
  ZoneId zone;
  Metric metric = Metric::NoiseDb;  // paired against density
  std::optional<double> r;
  std::size_t n = 0;
  Instant from{};
  Instant to{};

  nlohmann::json to_json() const;
};

// ---------------------------------------------------------------------------
// Acoustics

struct NoiseSource {
  GeoPoint location;
  double level_db_at_ref = 60.0;  // at 1 m
};

inline constexpr double kNoiseReferenceDistanceM = 1.0;

/// Energetic sum 10 log10(sum 10^(L/10)). Throws Error(EmptyInput).
double aggregate_noise(std::span<const double> levels_db);

/// Free-field spherical spreading, 20 dB per distance decade, distances below
/// 1 m clamped, floored at 0 dB.
double propagate_noise(const NoiseSource& source, GeoPoint receiver, GeoPoint origin);
double attenuate_noise(double level_db_at_ref, double distance_m);

// ---------------------------------------------------------------------------
// Store-backed analytics

struct HeatIslandPoint {
  Instant bin_start{};
  double delta_c = 0.0;
};

struct ZoneStatus {
  ZoneId zone;
  std::optional<Instant> density_bin;
  std::optional<double> density;
  std::optional<double> density_variance;
  std::optional<double> noise_db;
  std::optional<double> temperature_c;
  std::optional<double> heat_island_dt;
  bool hotspot_active = false;
};

struct MonitorSnapshot {
  Instant at{};
  std::vector<ZoneStatus> zones;  // sorted by zone id

  nlohmann::json to_json() const;
};

nlohmann::json to_json(const Hotspot& h);
nlohmann::json to_json(const DensityEstimate& d);

/// The service-specific analytics over a store. Stateless apart from its
/// references; every call reads the store's current state.
class Analyzer {
 public:
  Analyzer(const ZoneSet& zones, const SensorRegistry& registry, const Store& store, AnalyticsConfig config);

  const AnalyticsConfig& config() const noexcept { return config_; }

  /// Variance of a zone's per-bin person count for one source kind.
  double source_variance(const ZoneId& zone, SourceKind source) const;

  /// Fused density for every bin in [from, to) that has a people-count bin.
  std::vector<DensityEstimate> density_series(const ZoneId& zone, Instant from, Instant to) const;
  std::optional<DensityEstimate> density_at(const ZoneId& zone, Instant at) const;

  /// Hotspots of every zone inside [from, to), ordered by (zone, start).
  std::vector<Hotspot> hotspots(Instant from, Instant to) const;
  std::vector<Hotspot> zone_hotspots(const ZoneId& zone, Instant from, Instant to) const;

  /// Density paired with noise_db or temperature_c at lag zero.
  /// Throws Error(UnknownZone | InvalidArgument | BadRange).
  CorrelationReport correlation(const ZoneId& zone, Metric metric, Instant from, Instant to) const;

  /// Zone temperature minus reference temperature per aligned bin.
  /// Throws Error(NoReferenceConfigured | NoOverlap | UnknownZone).
  std::vector<HeatIslandPoint> heat_island_index(const ZoneId& zone, Instant from, Instant to) const;

  /// Latest-at-or-before values for each zone.
  MonitorSnapshot monitor_snapshot(Instant at) const;
  ZoneStatus zone_status(const ZoneId& zone, Instant at) const;

 private:
  BinnedSeries environmental(const ZoneId& zone, Metric metric, Instant from, Instant to) const;

  const ZoneSet& zones_;
  const SensorRegistry& registry_;
  const Store& store_;
  AnalyticsConfig config_;
};

}  // namespace htwin
