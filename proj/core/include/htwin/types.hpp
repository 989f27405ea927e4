#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "htwin/geo.hpp"
#include "htwin/time.hpp"

namespace htwin {

enum class Metric : std::uint8_t {
  TemperatureC,
  HumidityPct,
  NoiseDb,
  CameraCount,
  WifiCount,
  StatEstimate,
};

enum class SourceKind : std::uint8_t {
  Camera,
  WifiBt,
  Statistical,
  Environmental,
};

inline constexpr std::array kAllMetrics{Metric::TemperatureC, Metric::HumidityPct, Metric::NoiseDb,
                                        Metric::CameraCount,  Metric::WifiCount,   Metric::StatEstimate};
inline constexpr std::array kAllSourceKinds{SourceKind::Camera, SourceKind::WifiBt, SourceKind::Statistical,
                                            SourceKind::Environmental};

std::string_view to_string(Metric m) noexcept;
std::string_view to_string(SourceKind s) noexcept;
std::optional<Metric> parse_metric(std::string_view text) noexcept;
std::optional<SourceKind> parse_source_kind(std::string_view text) noexcept;

/// The only source kind a metric may come from.
SourceKind source_for(Metric m) noexcept;
bool is_people_count(Metric m) noexcept;

enum class Aggregation { Mean, Sum };
/// Counts sum within a bin; state variables average.
Aggregation aggregation_for(Metric m) noexcept;

struct SeriesKey {
  ZoneId zone;
  Metric metric = Metric::TemperatureC;
  SourceKind source = SourceKind::Environmental;

  friend auto operator<=>(const SeriesKey&, const SeriesKey&) = default;
  friend bool operator==(const SeriesKey&, const SeriesKey&) = default;
};

std::string to_string(const SeriesKey& key);

/// One fixed-width aggregate; bins are never materialized empty.
struct TimeSeriesBin {
  Instant bin_start{};
  double value = 0.0;
  std::uint32_t sample_count = 1;

  friend bool operator==(const TimeSeriesBin&, const TimeSeriesBin&) = default;
};

struct SensorReading {
  std::string reading_id;
  std::string sensor_id;
  Metric metric = Metric::TemperatureC;
  double value = 0.0;
  Instant timestamp{};
  std::optional<GeoPoint> location;
  SourceKind source = SourceKind::Environmental;
  /// Resolved from `location` during validation; empty before.
  ZoneId zone;

  SeriesKey series_key() const { return {zone, metric, source}; }
};

}  // namespace htwin
