#pragma once

#include <functional>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "htwin/harmonize.hpp"
#include "htwin/store.hpp"
#include "htwin/types.hpp"
#include "json.hpp"

namespace htwin {

struct RegistryEntry {
  std::string sensor_id;
  GeoPoint location;
  ZoneId zone;  // resolved via ZoneSet::locate on load
  Metric metric = Metric::TemperatureC;
  SourceKind source = SourceKind::Environmental;
  std::optional<double> variance_persons2;
};

class SensorRegistry {
 public:
  SensorRegistry() = default;
  /// Resolves every entry's zone. Throws Error(InvalidArgument) for a sensor
  /// outside all zones, a repeated id or a non-positive variance.
  SensorRegistry(std::vector<RegistryEntry> entries, const ZoneSet& zones);

  /// JSON array of {sensor_id, lon, lat, metric, source_kind?, variance_persons2?}.
  static SensorRegistry from_json(const nlohmann::json& doc, const ZoneSet& zones);
  nlohmann::json to_json() const;

  const RegistryEntry* find(std::string_view sensor_id) const noexcept;
  /// Sorted by sensor_id.
  const std::vector<RegistryEntry>& entries() const noexcept { return entries_; }

 private:
  std::vector<RegistryEntry> entries_;
};

enum class RejectReason {
  MalformedJson,
  MissingField,
  UnknownSensor,
  UnknownMetric,
  BadTimestamp,
  OutOfRange,
  FutureTimestamp,
  OutsideStudyArea,
  MetricSourceMismatch,
  OutOfOrder,
};

std::string_view to_string(RejectReason r) noexcept;

/// Parses one NDJSON record; a missing location falls back to the registry.
/// Throws Error(MalformedJson | MissingField | UnknownSensor | UnknownMetric |
/// BadTimestamp).
SensorReading parse_reading(std::string_view line, const SensorRegistry& registry);

struct Verdict {
  std::optional<RejectReason> rejection;
  std::string detail;
  ZoneId zone;

  bool accepted() const noexcept { return !rejection.has_value(); }
};

inline constexpr Seconds kFutureTolerance{60};

/// Range gates, clock gate, study-area gate and metric/source consistency.
/// When `registry` is given, a registered sensor's declared metric and source
/// must match the reading.
Verdict validate(const SensorReading& r, const ZoneSet& zones, Instant now,
                 const SensorRegistry* registry = nullptr);

struct RejectedLine {
  std::size_t line = 0;
  RejectReason reason = RejectReason::MalformedJson;
  std::string detail;
};

struct IngestReport {
  std::size_t accepted = 0;
  std::vector<RejectedLine> rejected;
  std::size_t duplicates = 0;
  std::size_t outliers = 0;

  std::size_t total() const noexcept { return accepted + rejected.size() + duplicates; }
  nlohmann::json to_json() const;
};

/// The raw-data-zone entry point: parse, validate, deduplicate, harmonize and
/// commit one batch atomically.
class Ingestor {
 public:
  using Clock = std::function<Instant()>;
  static Instant system_now();

  Ingestor(const ZoneSet& zones, const SensorRegistry& registry, Store& store, BinWidth width,
           Clock clock = &Ingestor::system_now);

  /// Blank lines are skipped and not counted; line numbers are 1-based.
  /// Throws Error(StoreUnavailable) with nothing committed.
  IngestReport ingest_batch(std::istream& lines);
  IngestReport ingest_text(std::string_view text);

 private:
  const ZoneSet& zones_;
  const SensorRegistry& registry_;
  Store& store_;
  BinWidth width_;
  Clock clock_;
};

}  // namespace htwin
