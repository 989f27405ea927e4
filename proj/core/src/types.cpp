#include "htwin/types.hpp"

namespace htwin {

std::string_view to_string(Metric m) noexcept {
  switch (m) {
    case Metric::TemperatureC: return "temperature_c";
    case Metric::HumidityPct: return "humidity_pct";
    case Metric::NoiseDb: return "noise_db";
    case Metric::CameraCount: return "camera_count";
    case Metric::WifiCount: return "wifi_count";
    case Metric::StatEstimate: return "stat_estimate";
  }
  return "?";
}

std::string_view to_string(SourceKind s) noexcept {
  switch (s) {
    case SourceKind::Camera: return "camera";
    case SourceKind::WifiBt: return "wifi_bt";
    case SourceKind::Statistical: return "statistical";
    case SourceKind::Environmental: return "environmental";
  }
  return "?";
}

std::optional<Metric> parse_metric(std::string_view text) noexcept {
  for (Metric m : kAllMetrics) {
    if (to_string(m) == text) return m;
  }
  return std::nullopt;
}

std::optional<SourceKind> parse_source_kind(std::string_view text) noexcept {
  for (SourceKind s : kAllSourceKinds) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

SourceKind source_for(Metric m) noexcept {
  switch (m) {
    case Metric::CameraCount: return SourceKind::Camera;
    case Metric::WifiCount: return SourceKind::WifiBt;
    case Metric::StatEstimate: return SourceKind::Statistical;
    default: return SourceKind::Environmental;
  }
}

bool is_people_count(Metric m) noexcept { return source_for(m) != SourceKind::Environmental; }

Aggregation aggregation_for(Metric m) noexcept {
  return (m == Metric::CameraCount || m == Metric::WifiCount) ? Aggregation::Sum : Aggregation::Mean;
}

std::string to_string(const SeriesKey& key) {
  return key.zone + "/" + std::string(to_string(key.metric)) + "/" + std::string(to_string(key.source));
}

}  // namespace htwin
