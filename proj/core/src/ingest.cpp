#include "htwin/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "htwin/error.hpp"

namespace htwin {

using nlohmann::json;

std::string_view to_string(RejectReason r) noexcept {
  switch (r) {
    case RejectReason::MalformedJson: return "MalformedJson";
    case RejectReason::MissingField: return "MissingField";
    case RejectReason::UnknownSensor: return "UnknownSensor";
    case RejectReason::UnknownMetric: return "UnknownMetric";
    case RejectReason::BadTimestamp: return "BadTimestamp";
    case RejectReason::OutOfRange: return "OutOfRange";
    case RejectReason::FutureTimestamp: return "FutureTimestamp";
    case RejectReason::OutsideStudyArea: return "OutsideStudyArea";
    case RejectReason::MetricSourceMismatch: return "MetricSourceMismatch";
    case RejectReason::OutOfOrder: return "OutOfOrder";
  }
  return "?";
}

SensorRegistry::SensorRegistry(std::vector<RegistryEntry> entries, const ZoneSet& zones) : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(), [](const auto& a, const auto& b) { return a.sensor_id < b.sensor_id; });
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto& e = entries_[i];
    if (i > 0 && entries_[i - 1].sensor_id == e.sensor_id) {
      throw Error(Errc::InvalidArgument, "sensor " + e.sensor_id + " registered twice");
    }
    const auto zone = zones.locate(e.location);
    if (!zone) throw Error(Errc::InvalidArgument, "sensor " + e.sensor_id + " lies outside every zone");
    e.zone = *zone;
    if (e.source != source_for(e.metric)) {
      throw Error(Errc::InvalidArgument, "sensor " + e.sensor_id + " metric/source_kind mismatch");
    }
    if (e.variance_persons2 && !(*e.variance_persons2 > 0.0)) {
      throw Error(Errc::InvalidArgument, "sensor " + e.sensor_id + " variance must be positive");
    }
  }
}

SensorRegistry SensorRegistry::from_json(const json& doc, const ZoneSet& zones) {
  if (!doc.is_array()) throw Error(Errc::MalformedJson, "sensor registry must be a JSON array");
  std::vector<RegistryEntry> entries;
  for (const auto& item : doc) {
    RegistryEntry e;
    try {
      e.sensor_id = item.at("sensor_id").get<std::string>();
      e.location = {item.at("lon").get<double>(), item.at("lat").get<double>()};
      const auto metric = parse_metric(item.at("metric").get<std::string>());
      if (!metric) throw Error(Errc::UnknownMetric, "sensor " + e.sensor_id);
      e.metric = *metric;
      e.source = source_for(e.metric);
      if (item.contains("source_kind")) {
        const auto source = parse_source_kind(item["source_kind"].get<std::string>());
        if (!source) throw Error(Errc::InvalidArgument, "sensor " + e.sensor_id + " has unknown source_kind");
        e.source = *source;
      }
      if (item.contains("variance_persons2") && !item["variance_persons2"].is_null()) {
        e.variance_persons2 = item["variance_persons2"].get<double>();
      }
    } catch (const json::exception& ex) {
      throw Error(Errc::MalformedJson, std::string("sensor registry: ") + ex.what());
    }
    entries.push_back(std::move(e));
  }
  return SensorRegistry(std::move(entries), zones);
}

json SensorRegistry::to_json() const {
  json out = json::array();
  for (const auto& e : entries_) {
    json item = {{"sensor_id", e.sensor_id},
                 {"lon", e.location.lon},
                 {"lat", e.location.lat},
                 {"metric", to_string(e.metric)},
                 {"source_kind", to_string(e.source)}};
    if (e.variance_persons2) item["variance_persons2"] = *e.variance_persons2;
    out.push_back(std::move(item));
  }
  return out;
}

const RegistryEntry* SensorRegistry::find(std::string_view sensor_id) const noexcept {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), sensor_id,
                             [](const RegistryEntry& e, std::string_view id) { return e.sensor_id < id; });
  return it != entries_.end() && it->sensor_id == sensor_id ? &*it : nullptr;
}

namespace {

std::string required_text(const json& rec, const char* name) {
  if (!rec.contains(name) || rec[name].is_null()) throw Error(Errc::MissingField, name);
  if (!rec[name].is_string()) throw Error(Errc::MalformedJson, std::string(name) + " must be a string");
  return rec[name].get<std::string>();
}

bool integer_valued(double v) { return std::floor(v) == v; }

}  // namespace

SensorReading parse_reading(std::string_view line, const SensorRegistry& registry) {
  json rec = json::parse(line.begin(), line.end(), nullptr, false);
  if (rec.is_discarded() || !rec.is_object()) throw Error(Errc::MalformedJson, "record is not a JSON object");

  SensorReading r;
  r.reading_id = required_text(rec, "reading_id");
  r.sensor_id = required_text(rec, "sensor_id");
  const std::string metric = required_text(rec, "metric");
  const auto m = parse_metric(metric);
  if (!m) throw Error(Errc::UnknownMetric, "unknown metric '" + metric + "'");
  r.metric = *m;

  if (!rec.contains("value") || rec["value"].is_null()) throw Error(Errc::MissingField, "value");
  if (!rec["value"].is_number()) throw Error(Errc::MalformedJson, "value must be a number");
  r.value = rec["value"].get<double>();

  if (!rec.contains("timestamp") || rec["timestamp"].is_null()) throw Error(Errc::MissingField, "timestamp");
  if (!rec["timestamp"].is_string()) throw Error(Errc::BadTimestamp, "timestamp must be an RFC 3339 string");
  r.timestamp = parse_rfc3339(rec["timestamp"].get<std::string>());

  const bool has_lat = rec.contains("lat") && !rec["lat"].is_null();
  const bool has_lon = rec.contains("lon") && !rec["lon"].is_null();
  if (has_lat != has_lon) throw Error(Errc::MissingField, has_lat ? "lon" : "lat");

  const RegistryEntry* entry = registry.find(r.sensor_id);
  if (has_lat) {
    if (!rec["lat"].is_number() || !rec["lon"].is_number()) throw Error(Errc::MalformedJson, "lat/lon must be numbers");
    r.location = GeoPoint{rec["lon"].get<double>(), rec["lat"].get<double>()};
  } else if (entry) {
    r.location = entry->location;
  } else {
    throw Error(Errc::UnknownSensor, "sensor '" + r.sensor_id + "' is not registered and the record has no location");
  }

  r.source = entry ? entry->source : source_for(r.metric);
  if (rec.contains("source_kind") && rec["source_kind"].is_string()) {
    if (const auto s = parse_source_kind(rec["source_kind"].get<std::string>())) r.source = *s;
  }
  return r;
}

Verdict validate(const SensorReading& r, const ZoneSet& zones, Instant now, const SensorRegistry* registry) {
  auto reject = [](RejectReason why, std::string detail) { return Verdict{why, std::move(detail), {}}; };

  if (r.source != source_for(r.metric)) {
    return reject(RejectReason::MetricSourceMismatch,
                  std::string(to_string(r.metric)) + " cannot come from " + std::string(to_string(r.source)));
  }
  if (registry) {
    if (const auto* entry = registry->find(r.sensor_id); entry && entry->metric != r.metric) {
      return reject(RejectReason::MetricSourceMismatch,
                    "sensor " + r.sensor_id + " is registered for " + std::string(to_string(entry->metric)));
    }
  }

  const double v = r.value;
  bool in_range = std::isfinite(v);
  switch (r.metric) {
    case Metric::TemperatureC: in_range = in_range && v >= -10.0 && v <= 60.0; break;
    case Metric::HumidityPct: in_range = in_range && v >= 0.0 && v <= 100.0; break;
    case Metric::NoiseDb: in_range = in_range && v >= 20.0 && v <= 140.0; break;
    case Metric::CameraCount:
    case Metric::WifiCount:
    case Metric::StatEstimate: in_range = in_range && v >= 0.0 && integer_valued(v); break;
  }
  if (!in_range) {
    std::ostringstream os;
    os << to_string(r.metric) << " value " << v << " outside its validity range";
    return reject(RejectReason::OutOfRange, os.str());
  }

  if (r.timestamp > now + kFutureTolerance) {
    return reject(RejectReason::FutureTimestamp, "timestamp " + format_rfc3339(r.timestamp) + " is in the future");
  }

  if (!r.location || !r.location->valid()) return reject(RejectReason::OutsideStudyArea, "no valid location");
  const auto zone = zones.locate(*r.location);
  if (!zone) return reject(RejectReason::OutsideStudyArea, "location is outside every zone");
  return Verdict{std::nullopt, {}, *zone};
}

json IngestReport::to_json() const {
  json rej = json::array();
  for (const auto& r : rejected) rej.push_back({{"line", r.line}, {"reason", to_string(r.reason)}, {"detail", r.detail}});
  return {{"accepted", accepted}, {"rejected", std::move(rej)}, {"duplicates", duplicates}, {"outliers", outliers}};
}

Instant Ingestor::system_now() { return std::chrono::time_point_cast<Seconds>(std::chrono::system_clock::now()); }

Ingestor::Ingestor(const ZoneSet& zones, const SensorRegistry& registry, Store& store, BinWidth width, Clock clock)
    : zones_(zones), registry_(registry), store_(store), width_(width), clock_(std::move(clock)) {}

IngestReport Ingestor::ingest_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  return ingest_batch(in);
}

IngestReport Ingestor::ingest_batch(std::istream& lines) {
  IngestReport report;
  const Instant now = clock_();

  struct Staged {
    std::size_t line;
    SensorReading reading;
    std::string raw;
  };
  std::vector<Staged> staged;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      SensorReading r = parse_reading(line, registry_);
      Verdict v = validate(r, zones_, now, &registry_);
      if (!v.accepted()) {
        report.rejected.push_back({lineno, *v.rejection, std::move(v.detail)});
        continue;
      }
      r.zone = std::move(v.zone);
      staged.push_back({lineno, std::move(r), line});
    } catch (const Error& e) {
      RejectReason why = RejectReason::MalformedJson;
      switch (e.code()) {
        case Errc::MissingField: why = RejectReason::MissingField; break;
        case Errc::UnknownSensor: why = RejectReason::UnknownSensor; break;
        case Errc::UnknownMetric: why = RejectReason::UnknownMetric; break;
        case Errc::BadTimestamp: why = RejectReason::BadTimestamp; break;
        default: break;
      }
      report.rejected.push_back({lineno, why, e.detail()});
    }
  }

  auto writer = store_.writer();
  std::set<std::string> seen;
  std::vector<SensorReading> accepted;
  StoreCommit commit;
  for (auto& s : staged) {
    if (writer.has_reading(s.reading.reading_id) || seen.contains(s.reading.reading_id)) {
      ++report.duplicates;
      continue;
    }
    const auto last = writer.last_bin_start(s.reading.series_key());
    if (last && width_.floor(s.reading.timestamp) < *last) {
      report.rejected.push_back({s.line, RejectReason::OutOfOrder,
                                 "bin " + format_rfc3339(width_.floor(s.reading.timestamp)) +
                                     " is older than the stored series end " + format_rfc3339(*last)});
      continue;
    }
    seen.insert(s.reading.reading_id);
    commit.reading_ids.push_back(s.reading.reading_id);
    commit.raw_lines.push_back(std::move(s.raw));
    accepted.push_back(std::move(s.reading));
  }
  std::sort(report.rejected.begin(), report.rejected.end(),
            [](const RejectedLine& a, const RejectedLine& b) { return a.line < b.line; });

  if (!accepted.empty()) {
    HarmonizedBatch h = harmonize(accepted, width_);
    commit.bins = std::move(h.bins);
    commit.flags = std::move(h.flags);
    report.outliers = commit.flags.size();
    writer.commit(commit);
  }
  report.accepted = accepted.size();
  return report;
}

}  // namespace htwin
