#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "htwin/error.hpp"
#include "htwin/flowsim.hpp"
#include "htwin/hub.hpp"
#include "htwin/job_pool.hpp"
#include "json.hpp"

namespace htwin {

struct HttpRequest {
  std::string method = "GET";
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
  std::string content_type;
  std::string authorization;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

enum class JobState { Queued, Running, Done, Failed };
std::string_view to_string(JobState s) noexcept;

struct JobStatus {
  std::string job_id;
  JobState state = JobState::Queued;
  SimulationRequest request;
  std::optional<std::string> error;
  std::size_t frame_count = 0;

  nlohmann::json to_json() const;
};

/// Simulation jobs on a bounded worker pool. A job moves queued -> running
/// -> done | failed and never back; its frames are immutable once done.
class SimulationJobs {
 public:
  SimulationJobs(const StreetGraph& graph, std::size_t workers);
  ~SimulationJobs();

  /// Validates the request against the graph before queueing.
  /// Throws Error(InvalidScenario).
  std::string submit(const SimulationRequest& request);
  std::optional<JobStatus> status(const std::string& job_id) const;
  std::vector<JobStatus> list() const;
  /// Null unless the job is done.
  std::shared_ptr<const std::vector<SimFrame>> frames(const std::string& job_id) const;
  void wait_idle() { pool_.wait_idle(); }

 private:
  struct Job {
    mutable std::mutex mu;
    std::string id;
    SimulationRequest request;
    JobState state = JobState::Queued;
    std::optional<std::string> error;
    std::shared_ptr<const std::vector<SimFrame>> frames;
  };
  std::shared_ptr<Job> find(const std::string& job_id) const;
  JobStatus snapshot(const Job& job) const;

  const StreetGraph& graph_;
  mutable std::mutex table_mu_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::atomic<std::uint64_t> next_id_{1};
  JobPool pool_;  // last: joins before the table goes away
};

struct ApiOptions {
  std::size_t workers = 2;
  std::optional<std::string> auth_token;
};

/// HTTP semantics of the hub without a socket: every endpoint is a function
/// of the request, the store and the job table.
class Api {
 public:
  Api(Hub& hub, ApiOptions options = {});

  HttpResponse handle(const HttpRequest& request);
  SimulationJobs& jobs() noexcept { return jobs_; }
  Hub& hub() noexcept { return hub_; }

 private:
  HttpResponse post_readings(const HttpRequest& r);
  HttpResponse zone_series(const std::string& zone, const HttpRequest& r);
  HttpResponse monitor(const HttpRequest& r);
  HttpResponse hotspots(const HttpRequest& r);
  HttpResponse correlations(const HttpRequest& r);
  HttpResponse post_simulation(const HttpRequest& r);
  HttpResponse simulation_status(const std::string& id);
  HttpResponse simulation_frames(const std::string& id, const HttpRequest& r);
  HttpResponse simulation_compare(const HttpRequest& r);
  HttpResponse layer(const std::string& name, const HttpRequest& r);
  HttpResponse get_assets(const HttpRequest& r);
  HttpResponse post_asset(const HttpRequest& r);

  Hub& hub_;
  ApiOptions options_;
  SimulationJobs jobs_;
};

/// Maps an error code onto the status the API answers with.
int http_status_for(Errc code) noexcept;

/// Socket front end for an Api.
class HttpServer {
 public:
  explicit HttpServer(Api& api);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  bool listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace htwin
