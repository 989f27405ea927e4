#include "htwin/service.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>

#include "htwin/error.hpp"
#include "httplib.h"

namespace htwin {

using nlohmann::json;

std::string_view to_string(JobState s) noexcept {
  switch (s) {
    case JobState::Queued: return "queued";
    case JobState::Running: return "running";
    case JobState::Done: return "done";
    case JobState::Failed: return "failed";
  }
  return "?";
}

json JobStatus::to_json() const {
  json out = {{"job_id", job_id},
              {"state", to_string(state)},
              {"spec", htwin::to_json(request)},
              {"frame_count", frame_count}};
  out["error"] = error ? json(*error) : json(nullptr);
  return out;
}

// ---------------------------------------------------------------------------
// Jobs

SimulationJobs::SimulationJobs(const StreetGraph& graph, std::size_t workers) : graph_(graph), pool_(workers) {}

SimulationJobs::~SimulationJobs() = default;

std::string SimulationJobs::submit(const SimulationRequest& request) {
  // Constructing the simulator is the validation step.
  { FlowSimulator probe(graph_, request.params, request.scenario); }

  auto job = std::make_shared<Job>();
  char id[32];
  std::snprintf(id, sizeof id, "sim-%06llu", static_cast<unsigned long long>(next_id_.fetch_add(1)));
  job->id = id;
  job->request = request;
  {
    std::lock_guard lock(table_mu_);
    jobs_.emplace(job->id, job);
  }
  pool_.submit([this, job] {
    {
      std::lock_guard lock(job->mu);
      job->state = JobState::Running;
    }
    try {
      FlowSimulator sim(graph_, job->request.params, job->request.scenario);
      auto frames = std::make_shared<const std::vector<SimFrame>>(sim.run());
      std::lock_guard lock(job->mu);
      job->frames = std::move(frames);
      job->state = JobState::Done;
    } catch (const std::exception& e) {
      std::lock_guard lock(job->mu);
      job->error = e.what();
      job->state = JobState::Failed;
    }
  });
  return job->id;
}

std::shared_ptr<SimulationJobs::Job> SimulationJobs::find(const std::string& job_id) const {
  std::lock_guard lock(table_mu_);
  const auto it = jobs_.find(job_id);
  return it == jobs_.end() ? nullptr : it->second;
}

JobStatus SimulationJobs::snapshot(const Job& job) const {
  std::lock_guard lock(job.mu);
  return {job.id, job.state, job.request, job.error, job.frames ? job.frames->size() : 0};
}

std::optional<JobStatus> SimulationJobs::status(const std::string& job_id) const {
  const auto job = find(job_id);
  if (!job) return std::nullopt;
  return snapshot(*job);
}

std::vector<JobStatus> SimulationJobs::list() const {
  std::vector<std::shared_ptr<Job>> all;
  {
    std::lock_guard lock(table_mu_);
    for (const auto& [_, j] : jobs_) all.push_back(j);
  }
  std::vector<JobStatus> out;
  for (const auto& j : all) out.push_back(snapshot(*j));
  return out;
}

std::shared_ptr<const std::vector<SimFrame>> SimulationJobs::frames(const std::string& job_id) const {
  const auto job = find(job_id);
  if (!job) return nullptr;
  std::lock_guard lock(job->mu);
  return job->state == JobState::Done ? job->frames : nullptr;
}

// ---------------------------------------------------------------------------
// Api

int http_status_for(Errc code) noexcept {
  switch (code) {
    case Errc::MalformedJson:
    case Errc::MissingField:
      return 400;
    case Errc::UnknownZone:
    case Errc::UnknownNode:
    case Errc::UnknownSensor:
      return 404;
    case Errc::DuplicateAsset:
      return 409;
    case Errc::StoreUnavailable:
    case Errc::Io:
      return 503;
    case Errc::BadRange:
    case Errc::BadTimestamp:
    case Errc::UnknownMetric:
    case Errc::InvalidArgument:
    case Errc::InvalidScenario:
    case Errc::NoReferenceConfigured:
    case Errc::NoOverlap:
    case Errc::ShapeMismatch:
    case Errc::ZoneMismatch:
    case Errc::BadBinWidth:
    case Errc::BinWidthMismatch:
    case Errc::InvalidGeometry:
      return 422;
    default:
      return 500;
  }
}

namespace {

HttpResponse json_response(int status, const json& body) { return {status, "application/json", body.dump()}; }

HttpResponse error_response(int status, std::string_view code, const std::string& message) {
  return json_response(status, {{"error", code}, {"message", message}});
}

HttpResponse error_response(const Error& e) {
  return error_response(http_status_for(e.code()), errc_name(e.code()), e.detail());
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    const auto j = path.find('/', i);
    const auto end = j == std::string_view::npos ? path.size() : j;
    if (end > i) parts.emplace_back(path.substr(i, end - i));
    i = end;
  }
  return parts;
}

std::optional<std::string> param(const HttpRequest& r, const char* key) {
  const auto it = r.query.find(key);
  if (it == r.query.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

Instant instant_param(const HttpRequest& r, const char* key, Instant fallback) {
  const auto v = param(r, key);
  if (!v) return fallback;
  try {
    return parse_instant(*v);
  } catch (const Error&) {
    throw Error(Errc::BadTimestamp, std::string("'") + key + "' is not an instant: " + *v);
  }
}

std::size_t size_param(const HttpRequest& r, const char* key, std::size_t fallback) {
  const auto v = param(r, key);
  if (!v) return fallback;
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc{} || ptr != v->data() + v->size()) {
    throw Error(Errc::InvalidArgument, std::string("'") + key + "' must be a non-negative integer");
  }
  return out;
}

Metric metric_param(const HttpRequest& r, const char* key, std::optional<Metric> fallback) {
  const auto v = param(r, key);
  if (!v) {
    if (fallback) return *fallback;
    throw Error(Errc::InvalidArgument, std::string("'") + key + "' is required");
  }
  const auto m = parse_metric(*v);
  if (!m) throw Error(Errc::UnknownMetric, "unknown metric '" + *v + "'");
  return *m;
}

json parse_body(const HttpRequest& r) {
  json doc = json::parse(r.body, nullptr, false);
  if (doc.is_discarded()) throw Error(Errc::MalformedJson, "request body is not valid JSON");
  return doc;
}

bool is_ndjson(std::string_view content_type) {
  const auto semi = content_type.find(';');
  std::string base(content_type.substr(0, semi));
  while (!base.empty() && base.back() == ' ') base.pop_back();
  for (auto& c : base) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return base == "application/x-ndjson" || base == "application/ndjson" || base == "application/jsonl" ||
         base == "application/x-jsonlines";
}

json bins_json(const std::vector<TimeSeriesBin>& bins) {
  json out = json::array();
  for (const auto& b : bins) {
    out.push_back({{"bin_start", format_rfc3339(b.bin_start)}, {"value", b.value}, {"sample_count", b.sample_count}});
  }
  return out;
}

}  // namespace

Api::Api(Hub& hub, ApiOptions options)
    : hub_(hub), options_(std::move(options)), jobs_(hub.graph(), options_.workers) {}

HttpResponse Api::handle(const HttpRequest& r) {
  if (options_.auth_token && r.authorization != "Bearer " + *options_.auth_token) {
    return error_response(401, "Unauthorized", "missing or wrong bearer token");
  }
  const auto seg = split_path(r.path);
  const bool get = r.method == "GET";
  const bool post = r.method == "POST";
  try {
    if (seg.size() == 1 && seg[0] == "health" && get) return json_response(200, {{"status", "ok"}});
    if (seg.size() == 1 && seg[0] == "readings" && post) return post_readings(r);
    if (seg.size() == 1 && seg[0] == "zones" && get) {
      json out = json::array();
      for (const auto& z : hub_.zones().zones()) {
        out.push_back({{"id", z.id()}, {"name", z.name()}, {"area_m2", z.area_m2()}});
      }
      return json_response(200, out);
    }
    if (seg.size() == 3 && seg[0] == "zones" && seg[2] == "series" && get) return zone_series(seg[1], r);
    if (seg.size() == 1 && seg[0] == "monitor" && get) return monitor(r);
    if (seg.size() == 1 && seg[0] == "hotspots" && get) return hotspots(r);
    if (seg.size() == 1 && seg[0] == "correlations" && get) return correlations(r);
    if (!seg.empty() && seg[0] == "simulations") {
      if (seg.size() == 1 && post) return post_simulation(r);
      if (seg.size() == 1 && get) {
        json out = json::array();
        for (const auto& s : jobs_.list()) out.push_back(s.to_json());
        return json_response(200, out);
      }
      if (seg.size() == 2 && seg[1] == "compare" && get) return simulation_compare(r);
      if (seg.size() == 2 && get) return simulation_status(seg[1]);
      if (seg.size() == 3 && seg[2] == "frames" && get) return simulation_frames(seg[1], r);
    }
    if (seg.size() == 2 && seg[0] == "layers" && get) return layer(seg[1], r);
    if (seg.size() == 1 && seg[0] == "assets") {
      if (get) return get_assets(r);
      if (post) return post_asset(r);
    }
    return error_response(404, "NotFound", "no route for " + r.method + " " + r.path);
  } catch (const Error& e) {
    return error_response(e);
  } catch (const json::exception& e) {
    return error_response(400, "MalformedJson", e.what());
  } catch (const std::exception& e) {
    return error_response(500, "Internal", e.what());
  }
}

HttpResponse Api::post_readings(const HttpRequest& r) {
  if (!is_ndjson(r.content_type)) {
    return error_response(400, "MalformedJson", "POST /readings expects an application/x-ndjson body");
  }
  Ingestor ingestor = hub_.ingestor();
  const IngestReport report = ingestor.ingest_text(r.body);
  const bool nothing_parsed =
      !report.rejected.empty() && report.accepted == 0 && report.duplicates == 0 &&
      std::all_of(report.rejected.begin(), report.rejected.end(),
                  [](const RejectedLine& l) { return l.reason == RejectReason::MalformedJson; });
  if (nothing_parsed) return json_response(400, {{"error", "MalformedJson"}, {"report", report.to_json()}});
  return json_response(200, report.to_json());
}

HttpResponse Api::zone_series(const std::string& zone, const HttpRequest& r) {
  if (!hub_.zones().contains(zone)) throw Error(Errc::UnknownZone, "unknown zone '" + zone + "'");
  const Metric metric = metric_param(r, "metric", std::nullopt);
  SourceKind source = source_for(metric);
  if (const auto s = param(r, "source")) {
    const auto parsed = parse_source_kind(*s);
    if (!parsed) throw Error(Errc::InvalidArgument, "unknown source kind '" + *s + "'");
    source = *parsed;
  }
  const Instant from = instant_param(r, "from", kBeginningOfTime);
  const Instant to = instant_param(r, "to", kEndOfTime);
  return json_response(200, bins_json(hub_.store().query_range({zone, metric, source}, from, to)));
}

HttpResponse Api::monitor(const HttpRequest& r) {
  return json_response(200, hub_.analyzer().monitor_snapshot(instant_param(r, "at", hub_.now())).to_json());
}

HttpResponse Api::hotspots(const HttpRequest& r) {
  const Instant from = instant_param(r, "from", kBeginningOfTime);
  const Instant to = instant_param(r, "to", kEndOfTime);
  if (from > to) throw Error(Errc::BadRange, "from is after to");
  json out = json::array();
  for (const auto& h : hub_.analyzer().hotspots(from, to)) out.push_back(to_json(h));
  return json_response(200, out);
}

HttpResponse Api::correlations(const HttpRequest& r) {
  const auto zone = param(r, "zone");
  if (!zone) throw Error(Errc::InvalidArgument, "'zone' is required");
  const Metric metric = metric_param(r, "metric", Metric::NoiseDb);
  const Instant from = instant_param(r, "from", kBeginningOfTime);
  const Instant to = instant_param(r, "to", kEndOfTime);
  return json_response(200, hub_.analyzer().correlation(*zone, metric, from, to).to_json());
}

HttpResponse Api::post_simulation(const HttpRequest& r) {
  const SimulationRequest req = simulation_request_from_json(parse_body(r));
  const std::string id = jobs_.submit(req);
  return json_response(202, {{"job_id", id}});
}

HttpResponse Api::simulation_status(const std::string& id) {
  const auto s = jobs_.status(id);
  if (!s) return error_response(404, "UnknownJob", "unknown simulation job '" + id + "'");
  return json_response(200, s->to_json());
}

HttpResponse Api::simulation_frames(const std::string& id, const HttpRequest& r) {
  const auto s = jobs_.status(id);
  if (!s) return error_response(404, "UnknownJob", "unknown simulation job '" + id + "'");
  const auto frames = jobs_.frames(id);
  if (!frames) {
    return error_response(409, "NotReady", "job " + id + " is " + std::string(to_string(s->state)));
  }
  const std::size_t from = size_param(r, "from_step", 0);
  const std::size_t to = size_param(r, "to_step", frames->size());
  if (from > to) throw Error(Errc::BadRange, "from_step is after to_step");
  const std::size_t lo = std::min(from, frames->size());
  const std::size_t hi = std::min(to, frames->size());
  return {200, "application/x-ndjson",
          frames_to_ndjson(std::span<const SimFrame>(frames->data() + lo, hi - lo))};
}

HttpResponse Api::simulation_compare(const HttpRequest& r) {
  const auto base_id = param(r, "baseline");
  const auto scen_id = param(r, "scenario");
  if (!base_id || !scen_id) throw Error(Errc::InvalidArgument, "'baseline' and 'scenario' job ids are required");
  std::shared_ptr<const std::vector<SimFrame>> sides[2];
  const std::string* ids[2] = {&*base_id, &*scen_id};
  for (int i = 0; i < 2; ++i) {
    const auto s = jobs_.status(*ids[i]);
    if (!s) return error_response(404, "UnknownJob", "unknown simulation job '" + *ids[i] + "'");
    sides[i] = jobs_.frames(*ids[i]);
    if (!sides[i]) {
      return error_response(409, "NotReady", "job " + *ids[i] + " is " + std::string(to_string(s->state)));
    }
  }
  json out = json::array();
  for (const auto& d : compare(*sides[0], *sides[1])) out.push_back(to_json(d));
  return json_response(200, out);
}

HttpResponse Api::layer(const std::string& file, const HttpRequest& r) {
  constexpr std::string_view kSuffix = ".geojson";
  const auto name = file.size() > kSuffix.size() && file.ends_with(kSuffix)
                        ? parse_layer_name(std::string_view(file).substr(0, file.size() - kSuffix.size()))
                        : std::nullopt;
  if (!name) return error_response(404, "UnknownLayer", "unknown layer '" + file + "'");
  const LayerExporter exporter = hub_.exporter();
  std::string body;
  switch (*name) {
    case LayerName::Zones:
      body = exporter.export_zones(instant_param(r, "at", hub_.now()));
      break;
    case LayerName::Sensors:
      body = exporter.export_sensors();
      break;
    case LayerName::Hotspots: {
      const Instant from = instant_param(r, "from", kBeginningOfTime);
      const Instant to = instant_param(r, "to", kEndOfTime);
      if (from > to) throw Error(Errc::BadRange, "from is after to");
      body = exporter.export_hotspots(from, to);
      break;
    }
    case LayerName::Heritage:
      body = exporter.export_heritage();
      break;
    case LayerName::Flow: {
      const auto job = param(r, "job");
      if (!job) throw Error(Errc::InvalidArgument, "the flow layer needs 'job'");
      const auto s = jobs_.status(*job);
      if (!s) return error_response(404, "UnknownJob", "unknown simulation job '" + *job + "'");
      const auto frames = jobs_.frames(*job);
      if (!frames) return error_response(409, "NotReady", "job " + *job + " is " + std::string(to_string(s->state)));
      body = exporter.export_flow(*frames, size_param(r, "step", 0));
      break;
    }
  }
  return {200, "application/geo+json", std::move(body)};
}

HttpResponse Api::get_assets(const HttpRequest& r) {
  const auto zone = param(r, "zone");
  if (zone && !hub_.zones().contains(*zone)) throw Error(Errc::UnknownZone, "unknown zone '" + *zone + "'");
  json out = json::array();
  for (const auto& a : hub_.store().list_assets(zone)) out.push_back(to_json(a));
  return json_response(200, out);
}

HttpResponse Api::post_asset(const HttpRequest& r) {
  const HeritageAsset asset = asset_from_json(parse_body(r), hub_.zones());
  hub_.store().register_asset(asset, hub_.zones());
  return json_response(201, to_json(asset));
}

// ---------------------------------------------------------------------------
// Socket adapter

struct HttpServer::Impl {
  Api& api;
  httplib::Server server;

  explicit Impl(Api& a) : api(a) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
      HttpRequest r;
      r.method = req.method;
      r.path = req.path;
      for (const auto& [k, v] : req.params) r.query.emplace(k, v);
      r.body = req.body;
      r.content_type = req.get_header_value("Content-Type");
      r.authorization = req.get_header_value("Authorization");
      const HttpResponse out = api.handle(r);
      res.status = out.status;
      res.set_content(out.body, out.content_type);
    };
    server.Get(".*", handler);
    server.Post(".*", handler);
    server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type, Authorization"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  }
};

HttpServer::HttpServer(Api& api) : impl_(std::make_unique<Impl>(api)) {}
HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }
void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}
void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace htwin
