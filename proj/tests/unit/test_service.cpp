#include <thread>

#include "doctest.h"
#include "fixture_hub.hpp"
#include "geojson_check.hpp"
#include "htwin/service.hpp"
#include "httplib.h"
#include "support.hpp"

using namespace htwin;
using namespace htwin::test;
using nlohmann::json;

namespace {

struct Harness {
  FixtureSet fs = small_fixtures();
  std::unique_ptr<Hub> hub;
  std::unique_ptr<Api> api;

  explicit Harness(bool ingest = true, ApiOptions options = {}) {
    AnalyticsConfig c;
    c.reference_zone = fixture_zone_id(0, 6);
    hub = fixture_hub(fs, c, ingest);
    api = std::make_unique<Api>(*hub, std::move(options));
  }

  HttpResponse get(const std::string& path, std::map<std::string, std::string> query = {}) {
    HttpRequest r;
    r.path = path;
    r.query = std::move(query);
    return api->handle(r);
  }
  HttpResponse post(const std::string& path, std::string body, std::string type = "application/json") {
    HttpRequest r;
    r.method = "POST";
    r.path = path;
    r.body = std::move(body);
    r.content_type = std::move(type);
    return api->handle(r);
  }
  std::string submit(const json& request) {
    const auto res = post("/simulations", request.dump());
    REQUIRE(res.status == 202);
    return json::parse(res.body)["job_id"].get<std::string>();
  }
};

json sim_request(std::size_t steps, const json& overlays = json::array()) {
  return {{"name", "t"}, {"overlays", overlays}, {"params", {{"steps", steps}, {"initial_population", {{"Z01", 500}}}}}};
}

}  // namespace

TEST_CASE("error codes map onto statuses") {
  CHECK(http_status_for(Errc::MalformedJson) == 400);
  CHECK(http_status_for(Errc::MissingField) == 400);
  CHECK(http_status_for(Errc::UnknownZone) == 404);
  CHECK(http_status_for(Errc::UnknownSensor) == 404);
  CHECK(http_status_for(Errc::DuplicateAsset) == 409);
  CHECK(http_status_for(Errc::StoreUnavailable) == 503);
  CHECK(http_status_for(Errc::BadRange) == 422);
  CHECK(http_status_for(Errc::InvalidScenario) == 422);
  CHECK(http_status_for(Errc::CorruptSnapshot) == 500);
}

TEST_CASE("routing basics and auth") {
  Harness h;
  CHECK(h.get("/health").status == 200);
  CHECK(h.get("/nowhere").status == 404);
  CHECK(h.post("/health", "").status == 404);
  const auto zones = json::parse(h.get("/zones").body);
  CHECK(zones.size() == 6);

  Harness locked(false, ApiOptions{1, "tok"});
  CHECK(locked.get("/health").status == 401);
  HttpRequest r;
  r.path = "/health";
  r.authorization = "Bearer tok";
  CHECK(locked.api->handle(r).status == 200);
  r.authorization = "Bearer nope";
  CHECK(locked.api->handle(r).status == 401);
}

TEST_CASE("POST /readings") {
  Harness h(false);
  CHECK(h.post("/readings", h.fs.readings, "application/json").status == 400);
  CHECK(h.post("/readings", "garbage\n{oops\n", "application/x-ndjson").status == 400);

  const auto first = h.post("/readings", h.fs.readings, "application/x-ndjson; charset=utf-8");
  REQUIRE(first.status == 200);
  const auto report = json::parse(first.body);
  CHECK(report["accepted"].get<int>() > 10000);
  const auto again = json::parse(h.post("/readings", h.fs.readings, "application/x-ndjson").body);
  CHECK(again["accepted"] == 0);
  CHECK(again["duplicates"].get<int>() == report["accepted"].get<int>() + report["duplicates"].get<int>());

  const auto unknown = h.post("/readings",
                              R"({"reading_id":"x1","sensor_id":"NOPE","metric":"noise_db","value":50,"timestamp":"2024-06-01T00:00:00Z"})"
                              "\n",
                              "application/x-ndjson");
  CHECK(unknown.status == 200);
  CHECK(json::parse(unknown.body)["rejected"].size() == 1);
}

TEST_CASE("query endpoints pass store and analytics results through") {
  Harness h;
  const Analyzer& an = h.hub->analyzer();

  const auto series = h.get("/zones/Z02/series", {{"metric", "camera_count"}, {"from", "2024-06-01T09:00:00Z"}, {"to", "1717236000"}});
  REQUIRE(series.status == 200);
  const auto bins = json::parse(series.body);
  const auto expected = h.hub->store().query_range({"Z02", Metric::CameraCount, SourceKind::Camera},
                                                   from_unix(1717236000 - 3600), from_unix(1717236000));
  REQUIRE(bins.size() == expected.size());
  for (std::size_t i = 0; i < bins.size(); ++i) CHECK(bins[i]["value"].get<double>() == expected[i].value);
  CHECK(h.get("/zones/Z99/series", {{"metric", "noise_db"}}).status == 404);
  CHECK(h.get("/zones/Z02/series", {{"metric", "noise_db"}, {"from", "200"}, {"to", "100"}}).status == 422);
  CHECK(h.get("/zones/Z02/series", {{"metric", "ozone"}}).status == 422);
  CHECK(h.get("/zones/Z02/series").status == 422);

  const auto mon = h.get("/monitor", {{"at", "2024-06-01T12:00:00Z"}});
  CHECK(json::parse(mon.body) == an.monitor_snapshot(from_unix(1717243200)).to_json());

  json hot = json::array();
  for (const auto& x : an.hotspots(kBeginningOfTime, kEndOfTime)) hot.push_back(to_json(x));
  CHECK(json::parse(h.get("/hotspots").body) == hot);
  CHECK_FALSE(hot.empty());
  CHECK(h.get("/hotspots", {{"from", "300"}, {"to", "200"}}).status == 422);

  const auto corr = h.get("/correlations", {{"zone", "Z02"}, {"metric", "temperature_c"}});
  CHECK(json::parse(corr.body) == an.correlation("Z02", Metric::TemperatureC, kBeginningOfTime, kEndOfTime).to_json());
  CHECK(h.get("/correlations").status == 422);
  CHECK(h.get("/correlations", {{"zone", "Q"}}).status == 404);
  CHECK(h.get("/correlations", {{"zone", "Z02"}, {"metric", "humidity_pct"}}).status == 422);
  CHECK(h.get("/monitor", {{"at", "yesterday"}}).status == 422);
}

TEST_CASE("layer endpoints") {
  Harness h;
  const auto ex = h.hub->exporter();
  const auto zones = h.get("/layers/zones.geojson", {{"at", "1717243200"}});
  CHECK(zones.status == 200);
  CHECK(zones.content_type == "application/geo+json");
  CHECK(zones.body == ex.export_zones(from_unix(1717243200)));
  CHECK(h.get("/layers/sensors.geojson").body == ex.export_sensors());
  CHECK(h.get("/layers/heritage.geojson").body == ex.export_heritage());
  CHECK(h.get("/layers/hotspots.geojson").body == ex.export_hotspots(kBeginningOfTime, kEndOfTime));
  CHECK(rfc7946_problem(json::parse(h.get("/layers/sensors.geojson").body)).empty());
  CHECK(h.get("/layers/roads.geojson").status == 404);
  CHECK(h.get("/layers/zones").status == 404);
  CHECK(h.get("/layers/flow.geojson").status == 422);
  CHECK(h.get("/layers/flow.geojson", {{"job", "sim-999999"}}).status == 404);

  const auto id = h.submit(sim_request(5));
  h.api->jobs().wait_idle();
  const auto flow = h.get("/layers/flow.geojson", {{"job", id}, {"step", "4"}});
  REQUIRE(flow.status == 200);
  CHECK(flow.body == ex.export_flow(*h.api->jobs().frames(id), 4));
  CHECK(h.get("/layers/flow.geojson", {{"job", id}, {"step", "5"}}).status == 422);
}

TEST_CASE("simulation jobs") {
  Harness h(false);
  CHECK(h.post("/simulations", "{").status == 400);
  const auto bad = h.post("/simulations", sim_request(10, json::array({{{"type", "event"}, {"zone", "Z99"}, {"multiplier", 2}, {"window", {0, 2}}}})).dump());
  CHECK(bad.status == 422);
  CHECK(json::parse(bad.body)["message"].get<std::string>().find("Z99") != std::string::npos);
  CHECK(h.get("/simulations/sim-000042").status == 404);
  CHECK(h.get("/simulations/sim-000042/frames").status == 404);

  const auto base = h.submit(sim_request(30));
  const auto event = h.submit(sim_request(30, json::array({{{"type", "event"}, {"zone", "Z03"}, {"multiplier", 4}, {"window", {5, 20}}}})));
  CHECK(base != event);
  h.api->jobs().wait_idle();

  const auto status = json::parse(h.get("/simulations/" + base).body);
  CHECK(status["state"] == "done");
  CHECK(status["frame_count"] == 30);
  CHECK(json::parse(h.get("/simulations").body).size() == 2);

  const auto req = simulation_request_from_json(sim_request(30));
  const auto direct = run_simulation(h.hub->graph(), req.params, req.scenario);
  const auto frames = h.get("/simulations/" + base + "/frames");
  CHECK(frames.content_type == "application/x-ndjson");
  CHECK(frames.body == frames_to_ndjson(direct));
  const auto part = h.get("/simulations/" + base + "/frames", {{"from_step", "3"}, {"to_step", "6"}});
  CHECK(part.body == frames_to_ndjson(std::span<const SimFrame>(direct).subspan(3, 3)));
  CHECK(h.get("/simulations/" + base + "/frames", {{"from_step", "6"}, {"to_step", "3"}}).status == 422);
  CHECK(h.get("/simulations/" + base + "/frames", {{"from_step", "x"}}).status == 422);

  const auto cmp = h.get("/simulations/compare", {{"baseline", base}, {"scenario", event}});
  REQUIRE(cmp.status == 200);
  const auto deltas = json::parse(cmp.body);
  CHECK(deltas.size() == 6);
  bool positive = false;
  for (const auto& d : deltas) positive |= d["zone"] == "Z03" && d["mean_delta"].get<double>() > 0;
  CHECK(positive);
  CHECK(h.get("/simulations/compare", {{"baseline", base}}).status == 422);

  const auto shorter = h.submit(sim_request(10));
  h.api->jobs().wait_idle();
  CHECK(h.get("/simulations/compare", {{"baseline", base}, {"scenario", shorter}}).status == 422);
}

TEST_CASE("job states only move forward") {
  const auto net = random_network(20, 1);
  SimulationJobs pool(net.graph, 1);
  SimulationRequest req;
  req.params.steps = 3000;
  std::vector<std::string> ids;
  for (int i = 0; i < 4; ++i) ids.push_back(pool.submit(req));
  int last = 0;
  for (int poll = 0; poll < 200; ++poll) {
    const auto s = pool.status(ids.back());
    REQUIRE(s.has_value());
    const int now = static_cast<int>(s->state);
    CHECK(now >= last);
    if (s->state != JobState::Done) CHECK(pool.frames(ids.back()) == nullptr);
    last = now;
    if (s->state == JobState::Done) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  pool.wait_idle();
  for (const auto& id : ids) {
    CHECK(pool.status(id)->state == JobState::Done);
    CHECK(pool.frames(id)->size() == 3000);
  }
  CHECK_FALSE(pool.status("sim-none"));
}

TEST_CASE("assets") {
  Harness h(false);
  const auto list = json::parse(h.get("/assets").body);
  CHECK(list.size() == h.hub->store().list_assets().size());
  CHECK(h.get("/assets", {{"zone", "Q"}}).status == 404);

  const GeoPoint p = h.hub->zones().at("Z04").centroid();
  const json asset = {{"asset_id", "A-new"}, {"name", "Chafariz"}, {"category", "monument"}, {"lon", p.lon}, {"lat", p.lat}};
  const auto created = h.post("/assets", asset.dump());
  CHECK(created.status == 201);
  CHECK(json::parse(created.body)["zone"] == "Z04");
  CHECK(h.post("/assets", asset.dump()).status == 409);
  CHECK(h.post("/assets", R"({"name":"no id"})").status == 400);
  CHECK(json::parse(h.get("/assets", {{"zone", "Z04"}}).body).size() >= 1);
}

TEST_CASE("real HTTP round trip") {
  Harness h(false);
  HttpServer server(*h.api);
  const int port = server.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  std::thread t([&] { server.listen(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(health->get_header_value("Access-Control-Allow-Origin") == "*");

  auto posted = client.Post("/readings", h.fs.readings, "application/x-ndjson");
  REQUIRE(posted);
  CHECK(posted->status == 200);
  CHECK(json::parse(posted->body)["accepted"].get<int>() > 10000);

  auto layer = client.Get("/layers/zones.geojson?at=2024-06-01T12:00:00Z");
  REQUIRE(layer);
  CHECK(layer->get_header_value("Content-Type") == "application/geo+json");
  CHECK(layer->body == h.hub->exporter().export_zones(from_unix(1717243200)));

  auto options = client.Options("/readings");
  REQUIRE(options);
  CHECK(options->status == 204);

  server.stop();
  t.join();
}

TEST_CASE("empty store answers with nulls and empty lists") {
  const auto net = random_network(4, 2);
  Hub hub(net.zones, std::make_unique<Store>(), AnalyticsConfig{});
  hub.set_graph(net.graph);
  Api api(hub);
  HttpRequest r;
  r.path = "/monitor";
  r.query = {{"at", "2024-06-01T12:00:00Z"}};
  const auto mon = json::parse(api.handle(r).body);
  REQUIRE(mon["zones"].size() == 4);
  for (const auto& z : mon["zones"]) {
    CHECK(z["density"].is_null());
    CHECK(z["noise_db"].is_null());
    CHECK(z["hotspot_active"] == false);
  }
  r.query.clear();
  r.path = "/hotspots";
  CHECK(api.handle(r).body == "[]");
  r.path = "/assets";
  CHECK(api.handle(r).body == "[]");
  r.path = "/correlations";
  r.query = {{"zone", net.zones.zones().front().id()}};
  CHECK(json::parse(api.handle(r).body)["r"].is_null());
}

TEST_CASE("frames of an unfinished job answer 409") {
  const auto net = random_network(300, 4);
  Hub hub(net.zones, std::make_unique<Store>(), AnalyticsConfig{});
  hub.set_graph(net.graph);
  Api api(hub, ApiOptions{1, std::nullopt});
  HttpRequest post;
  post.method = "POST";
  post.path = "/simulations";
  post.body = R"({"name":"long","params":{"steps":8000}})";
  const auto first = json::parse(api.handle(post).body)["job_id"].get<std::string>();
  post.body = R"({"name":"short","params":{"steps":3}})";
  const auto second = json::parse(api.handle(post).body)["job_id"].get<std::string>();

  // One worker: the second job cannot start before the first finishes.
  HttpRequest get;
  get.path = "/simulations/" + second + "/frames";
  const auto early = api.handle(get);
  CHECK(early.status == 409);
  CHECK(json::parse(api.handle(HttpRequest{"GET", "/simulations/" + second, {}, "", "", ""}).body)["state"] == "queued");
  get.path = "/simulations/compare";
  get.query = {{"baseline", first}, {"scenario", second}};
  CHECK(api.handle(get).status == 409);

  api.jobs().wait_idle();
  get.path = "/simulations/" + second + "/frames";
  get.query.clear();
  CHECK(api.handle(get).status == 200);
}
