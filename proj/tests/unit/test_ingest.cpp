#include <sstream>

#include "doctest.h"
#include "htwin/error.hpp"
#include "htwin/ingest.hpp"
#include "support.hpp"

using namespace htwin;
using namespace htwin::test;
using nlohmann::json;

namespace {

struct Fixture {
  ZoneSet zones = zone_row(2);
  SensorRegistry registry{{{"T1", local(20, 20), "", Metric::TemperatureC, SourceKind::Environmental, {}},
                           {"C1", local(60, 60), "", Metric::CameraCount, SourceKind::Camera, 25.0},
                           {"H1", local(150, 50), "", Metric::HumidityPct, SourceKind::Environmental, {}}},
                          zones};
  Store store;
  Instant now = t0() + Seconds(86400);
  Ingestor ingestor{zones, registry, store, BinWidth(), [this] { return now; }};
};

std::string line(const std::string& id, const std::string& sensor, const std::string& metric, double value,
                 std::int64_t offset = 0, bool with_location = false) {
  json j = {{"reading_id", id},
            {"sensor_id", sensor},
            {"metric", metric},
            {"value", value},
            {"timestamp", format_rfc3339(t0() + Seconds(offset))}};
  if (with_location) {
    const GeoPoint p = local(30, 30);
    j["lon"] = p.lon;
    j["lat"] = p.lat;
  }
  return j.dump();
}

SensorReading good(Metric m, double v) {
  SensorReading r;
  r.reading_id = "x";
  r.sensor_id = "free";
  r.metric = m;
  r.value = v;
  r.timestamp = t0();
  r.location = local(10, 10);
  r.source = source_for(m);
  return r;
}

}  // namespace

TEST_CASE("parse_reading") {
  Fixture f;
  SUBCASE("all fields") {
    const auto r = parse_reading(line("r1", "T1", "temperature_c", 21.5, 0, true), f.registry);
    CHECK(r.reading_id == "r1");
    CHECK(r.metric == Metric::TemperatureC);
    CHECK(r.value == 21.5);
    CHECK(r.timestamp == t0());
    CHECK(r.location == local(30, 30));
  }
  SUBCASE("registry location fallback") {
    const auto r = parse_reading(line("r1", "T1", "temperature_c", 21.5), f.registry);
    CHECK(r.location == local(20, 20));
  }
  SUBCASE("errors") {
    auto code = [&](const std::string& text) {
      try {
        parse_reading(text, f.registry);
      } catch (const Error& e) {
        return e.code();
      }
      return Errc::Config;
    };
    CHECK(code(line("r1", "NOPE", "temperature_c", 1)) == Errc::UnknownSensor);
    CHECK(code("{not json") == Errc::MalformedJson);
    CHECK(code("[1,2]") == Errc::MalformedJson);
    CHECK(code(R"({"sensor_id":"T1","metric":"temperature_c","value":1,"timestamp":"2024-06-01T00:00:00Z"})") ==
          Errc::MissingField);
    CHECK(code(line("r1", "T1", "pressure_hpa", 1)) == Errc::UnknownMetric);
    CHECK(code(R"({"reading_id":"a","sensor_id":"T1","metric":"temperature_c","value":1,"timestamp":"noon"})") ==
          Errc::BadTimestamp);
  }
}

TEST_CASE("validate gates") {
  Fixture f;
  auto reason = [&](const SensorReading& r) { return validate(r, f.zones, f.now).rejection; };
  CHECK(reason(good(Metric::TemperatureC, 150)) == RejectReason::OutOfRange);
  CHECK(reason(good(Metric::TemperatureC, -10)) == std::nullopt);
  CHECK(reason(good(Metric::TemperatureC, 60)) == std::nullopt);
  CHECK(reason(good(Metric::TemperatureC, -10.01)) == RejectReason::OutOfRange);
  CHECK(reason(good(Metric::HumidityPct, 0)) == std::nullopt);
  CHECK(reason(good(Metric::HumidityPct, 100.5)) == RejectReason::OutOfRange);
  CHECK(reason(good(Metric::NoiseDb, 19.9)) == RejectReason::OutOfRange);
  CHECK(reason(good(Metric::NoiseDb, 140)) == std::nullopt);
  CHECK(reason(good(Metric::CameraCount, -3)) == RejectReason::OutOfRange);
  CHECK(reason(good(Metric::CameraCount, 2.5)) == RejectReason::OutOfRange);
  CHECK(reason(good(Metric::WifiCount, 0)) == std::nullopt);

  auto future = good(Metric::TemperatureC, 20);
  future.timestamp = f.now + Seconds(60);
  CHECK(reason(future) == std::nullopt);
  future.timestamp = f.now + Seconds(61);
  CHECK(reason(future) == RejectReason::FutureTimestamp);

  auto outside = good(Metric::TemperatureC, 20);
  outside.location = local(5000, 5000);
  CHECK(reason(outside) == RejectReason::OutsideStudyArea);

  auto wrong_source = good(Metric::CameraCount, 5);
  wrong_source.source = SourceKind::WifiBt;
  CHECK(reason(wrong_source) == RejectReason::MetricSourceMismatch);

  const auto v = validate(good(Metric::TemperatureC, 20), f.zones, f.now);
  CHECK(v.accepted());
  CHECK(v.zone == "A");
}

TEST_CASE("ingest_batch counts and idempotence") {
  Fixture f;
  const std::string batch = line("r1", "T1", "temperature_c", 20, 0) + "\n" +
                            line("r2", "T1", "temperature_c", 21, 60) + "\n" +
                            line("r3", "T1", "temperature_c", 22, 120) + "\n" +
                            line("r4", "T1", "temperature_c", 99, 180) + "\n";
  const auto first = f.ingestor.ingest_text(batch);
  CHECK(first.accepted == 3);
  REQUIRE(first.rejected.size() == 1);
  CHECK(first.rejected[0].line == 4);
  CHECK(first.rejected[0].reason == RejectReason::OutOfRange);
  CHECK(first.duplicates == 0);
  const std::string snap = f.store.snapshot_bytes();

  const auto second = f.ingestor.ingest_text(batch);
  CHECK(second.accepted == 0);
  CHECK(second.duplicates == 3);
  CHECK(second.rejected.size() == 1);
  CHECK(f.store.snapshot_bytes() == snap);

  const auto bins = f.store.series({"A", Metric::TemperatureC, SourceKind::Environmental});
  REQUIRE(bins.size() == 1);
  CHECK(bins[0].value == doctest::Approx(21.0));
  CHECK(bins[0].sample_count == 3u);
}

TEST_CASE("empty and blank input") {
  Fixture f;
  const auto empty = f.ingestor.ingest_text("");
  CHECK(empty.total() == 0);
  CHECK(empty.rejected.empty());
  const auto blanks = f.ingestor.ingest_text("\n\n" + line("r1", "T1", "temperature_c", 20) + "\n\n");
  CHECK(blanks.accepted == 1);
  CHECK(blanks.total() == 1);
}

TEST_CASE("duplicates within one batch count once") {
  Fixture f;
  const std::string l = line("r1", "C1", "camera_count", 5);
  const auto rep = f.ingestor.ingest_text(l + "\n" + l + "\n");
  CHECK(rep.accepted == 1);
  CHECK(rep.duplicates == 1);
  CHECK(f.store.series({"A", Metric::CameraCount, SourceKind::Camera})[0].value == 5.0);
}

TEST_CASE("late readings behind the stored series end are rejected") {
  Fixture f;
  f.ingestor.ingest_text(line("r1", "T1", "temperature_c", 20, 900));
  const auto rep = f.ingestor.ingest_text(line("r0", "T1", "temperature_c", 20, 0) + "\n" +
                                          line("r2", "T1", "temperature_c", 20, 910) + "\n");
  CHECK(rep.accepted == 1);
  REQUIRE(rep.rejected.size() == 1);
  CHECK(rep.rejected[0].reason == RejectReason::OutOfOrder);
  const auto bins = f.store.series({"A", Metric::TemperatureC, SourceKind::Environmental});
  REQUIRE(bins.size() == 1);
  CHECK(bins[0].sample_count == 2u);
}

TEST_CASE("registered metric must match") {
  Fixture f;
  const auto rep = f.ingestor.ingest_text(line("r1", "T1", "noise_db", 50));
  REQUIRE(rep.rejected.size() == 1);
  CHECK(rep.rejected[0].reason == RejectReason::MetricSourceMismatch);
}

TEST_CASE("report JSON shape") {
  Fixture f;
  const auto rep = f.ingestor.ingest_text(line("r1", "T1", "temperature_c", 20) + "\nnot json\n");
  const json j = rep.to_json();
  CHECK(j["accepted"] == 1);
  CHECK(j["duplicates"] == 0);
  CHECK(j["rejected"][0]["line"] == 2);
  CHECK(j["rejected"][0]["reason"] == "MalformedJson");
}

TEST_CASE("registry loading") {
  const ZoneSet zones = zone_row(2);
  const GeoPoint p = local(150, 50);
  const json doc = json::array({{{"sensor_id", "N1"}, {"lon", p.lon}, {"lat", p.lat}, {"metric", "noise_db"}}});
  const auto reg = SensorRegistry::from_json(doc, zones);
  REQUIRE(reg.find("N1") != nullptr);
  CHECK(reg.find("N1")->zone == "B");
  CHECK(reg.find("N1")->source == SourceKind::Environmental);
  CHECK(SensorRegistry::from_json(reg.to_json(), zones).to_json() == reg.to_json());
  const GeoPoint far = local(9000, 0);
  CHECK_THROWS_AS(SensorRegistry::from_json(
                      json::array({{{"sensor_id", "X"}, {"lon", far.lon}, {"lat", far.lat}, {"metric", "noise_db"}}}),
                      zones),
                  Error);
}
