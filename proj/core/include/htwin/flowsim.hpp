#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "htwin/geo.hpp"
#include "json.hpp"

namespace htwin {

struct SimParams {
  double outflow_fraction = 0.3;  // share of a zone's population leaving per step
  double cost_decay = 1.0;        // exponent on (1 + walk cost)
  std::map<ZoneId, double> base_attractiveness;  // zones not listed default to 1
  std::map<NodeId, double> gateway_arrival_rate;  // persons per step
  double departure_fraction = 0.05;
  std::size_t steps = 288;
  std::uint64_t seed = 0;
  bool stochastic = false;
  std::map<ZoneId, double> initial_population;  // zones not listed start empty
};

/// Half-open step range [from, to).
struct StepWindow {
  std::size_t from = 0;
  std::size_t to = 0;
  bool contains(std::size_t step) const noexcept { return step >= from && step < to; }
};

struct EventOverlay {
  ZoneId zone;
  double multiplier = 1.0;
  StepWindow window;
};

struct CloseEdgeOverlay {
  EdgeId edge;
  StepWindow window;
};

struct SeasonOverlay {
  double multiplier = 1.0;
};

using Overlay = std::variant<EventOverlay, CloseEdgeOverlay, SeasonOverlay>;

struct ScenarioSpec {
  std::string name = "baseline";
  std::vector<Overlay> overlays;
};

/// Zone and edge ordering shared by every frame of a run.
struct SimLayout {
  std::vector<ZoneId> zones;  // sorted
  std::vector<EdgeId> edges;  // sorted
};

/// Frame 0 is the initial state (no flows); frame t > 0 is the state after
/// the t-th transition.
struct SimFrame {
  std::size_t step = 0;
  std::vector<double> population;  // indexed like layout->zones
  std::vector<double> edge_flow;   // indexed like layout->edges
  double arrivals = 0.0;
  double departures = 0.0;
  std::shared_ptr<const SimLayout> layout;

  double total_population() const noexcept;
  friend bool operator==(const SimFrame& a, const SimFrame& b) {
    return a.step == b.step && a.population == b.population && a.edge_flow == b.edge_flow &&
           a.arrivals == b.arrivals && a.departures == b.departures;
  }
};

/// Deterministic replayable stream keyed by (seed, step, stream id).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t step, std::uint64_t stream) noexcept;
  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1).
  double next_double() noexcept;
  std::uint64_t poisson(double mean) noexcept;
  std::uint64_t binomial(std::uint64_t trials, double p) noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Aggregate zone-to-zone tourist flow on a street graph.
class FlowSimulator {
 public:
  /// Throws Error(InvalidScenario) naming the offending zone, node, edge or
  /// parameter.
  FlowSimulator(const StreetGraph& graph, SimParams params, std::optional<ScenarioSpec> scenario = std::nullopt);

  const std::shared_ptr<const SimLayout>& layout() const noexcept { return layout_; }
  const SimParams& params() const noexcept { return params_; }

  SimFrame initial_frame() const;
  /// Applies transition `step` (>= 1) to `population` in place and returns
  /// the resulting frame.
  SimFrame step(std::size_t step, std::vector<double>& population);

  /// Emits `steps` frames in order as they are produced.
  void run(const std::function<void(const SimFrame&)>& sink);
  std::vector<SimFrame> run();

 private:
  struct Link {
    std::size_t zone;
    double cost;
    std::size_t edge;
  };
  void rebuild_topology(const std::vector<bool>& open);

  const StreetGraph& graph_;
  SimParams params_;
  ScenarioSpec scenario_;
  std::shared_ptr<const SimLayout> layout_;
  std::vector<double> base_attractiveness_;
  std::vector<std::pair<std::size_t, double>> gateways_;  // (zone index, rate)
  std::vector<bool> departure_zone_;
  double season_ = 1.0;

  // Parallel edges per unordered zone pair, sorted by (cost, edge id).
  std::vector<std::vector<Link>> pair_edges_;  // indexed by zone; only j > i stored
  std::vector<std::vector<Link>> topology_;
  std::vector<bool> topology_open_;
};

std::vector<SimFrame> run_simulation(const StreetGraph& graph, const SimParams& params,
                                     const std::optional<ScenarioSpec>& scenario);

struct ZoneDelta {
  ZoneId zone;
  double mean_delta = 0.0;
  double peak_delta = 0.0;  // signed delta of largest magnitude
  std::size_t peak_step = 0;

  friend bool operator==(const ZoneDelta&, const ZoneDelta&) = default;
};

/// Per-zone scenario-minus-baseline indicators, sorted by zone id.
/// Throws Error(ShapeMismatch).
std::vector<ZoneDelta> compare(std::span<const SimFrame> baseline, std::span<const SimFrame> scenario);

// JSON surfaces.

SimParams params_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const SimParams& params);
ScenarioSpec scenario_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ScenarioSpec& scenario);

/// {"name", "overlays", "params"}; absent pieces take defaults.
struct SimulationRequest {
  ScenarioSpec scenario;
  SimParams params;
};
SimulationRequest simulation_request_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const SimulationRequest& request);

/// One compact JSON object per line; deterministic bytes.
std::string frame_to_ndjson_line(const SimFrame& frame);
std::string frames_to_ndjson(std::span<const SimFrame> frames);
std::vector<SimFrame> frames_from_ndjson(std::string_view text);
nlohmann::json to_json(const ZoneDelta& delta);

}  // namespace htwin
