#include <charconv>
#include <cmath>
#include <sstream>

#include "htwin/error.hpp"
#include "htwin/flowsim.hpp"

namespace htwin {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::InvalidScenario, what); }

double number(const json& doc, const char* key, double fallback) {
  if (!doc.contains(key) || doc[key].is_null()) return fallback;
  if (!doc[key].is_number()) invalid(std::string(key) + " must be a number");
  return doc[key].get<double>();
}

std::map<std::string, double> number_map(const json& doc, const char* key) {
  std::map<std::string, double> out;
  if (!doc.contains(key) || doc[key].is_null()) return out;
  if (!doc[key].is_object()) invalid(std::string(key) + " must be an object of numbers");
  for (const auto& [k, v] : doc[key].items()) {
    if (!v.is_number()) invalid(std::string(key) + "." + k + " must be a number");
    out[k] = v.get<double>();
  }
  return out;
}

std::optional<std::size_t> count_of(const json& v) {
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) return std::nullopt;
  return v.get<std::size_t>();
}

StepWindow window_of(const json& overlay) {
  if (overlay.contains("window") && overlay["window"].is_array() && overlay["window"].size() == 2) {
    const auto from = count_of(overlay["window"][0]);
    const auto to = count_of(overlay["window"][1]);
    if (from && to) return {*from, *to};
  }
  invalid("overlay window must be [from_step, to_step] with non-negative integers");
}

std::string text(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_string()) invalid(std::string("overlay needs a string '") + key + "'");
  return doc[key].get<std::string>();
}

void append_number(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) invalid("unformattable number");
  out.append(buf, ptr);
}

void append_string(std::string& out, const std::string& s) { out += json(s).dump(); }

}  // namespace

SimParams params_from_json(const json& doc) {
  if (doc.is_null()) return {};
  if (!doc.is_object()) invalid("params must be an object");
  SimParams p;
  p.outflow_fraction = number(doc, "outflow_fraction", p.outflow_fraction);
  p.cost_decay = number(doc, "cost_decay", p.cost_decay);
  p.departure_fraction = number(doc, "departure_fraction", p.departure_fraction);
  p.base_attractiveness = number_map(doc, "base_attractiveness");
  p.gateway_arrival_rate = number_map(doc, "gateway_arrival_rate");
  p.initial_population = number_map(doc, "initial_population");
  if (doc.contains("steps")) {
    const auto steps = count_of(doc["steps"]);
    if (!steps) invalid("steps must be a non-negative integer");
    p.steps = *steps;
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_integer()) invalid("seed must be an integer");
    p.seed = doc["seed"].is_number_unsigned() ? doc["seed"].get<std::uint64_t>()
                                              : static_cast<std::uint64_t>(doc["seed"].get<std::int64_t>());
  }
  if (doc.contains("stochastic")) {
    if (!doc["stochastic"].is_boolean()) invalid("stochastic must be a boolean");
    p.stochastic = doc["stochastic"].get<bool>();
  }
  return p;
}

json to_json(const SimParams& p) {
  return {{"outflow_fraction", p.outflow_fraction},
          {"cost_decay", p.cost_decay},
          {"departure_fraction", p.departure_fraction},
          {"base_attractiveness", p.base_attractiveness},
          {"gateway_arrival_rate", p.gateway_arrival_rate},
          {"initial_population", p.initial_population},
          {"steps", p.steps},
          {"seed", p.seed},
          {"stochastic", p.stochastic}};
}

ScenarioSpec scenario_from_json(const json& doc) {
  ScenarioSpec s;
  if (doc.is_null()) return s;
  if (!doc.is_object()) invalid("scenario must be an object");
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) invalid("scenario name must be a string");
    s.name = doc["name"].get<std::string>();
  }
  if (!doc.contains("overlays") || doc["overlays"].is_null()) return s;
  if (!doc["overlays"].is_array()) invalid("overlays must be an array");
  for (const auto& o : doc["overlays"]) {
    if (!o.is_object()) invalid("overlay must be an object");
    const std::string type = text(o, "type");
    if (type == "event") {
      s.overlays.emplace_back(EventOverlay{text(o, "zone"), number(o, "multiplier", 1.0), window_of(o)});
    } else if (type == "close_edge") {
      s.overlays.emplace_back(CloseEdgeOverlay{text(o, "edge"), window_of(o)});
    } else if (type == "season") {
      s.overlays.emplace_back(SeasonOverlay{number(o, "multiplier", 1.0)});
    } else {
      invalid("unknown overlay type '" + type + "'");
    }
  }
  return s;
}

json to_json(const ScenarioSpec& s) {
  json overlays = json::array();
  for (const auto& overlay : s.overlays) {
    if (const auto* ev = std::get_if<EventOverlay>(&overlay)) {
      overlays.push_back({{"type", "event"},
                          {"zone", ev->zone},
                          {"multiplier", ev->multiplier},
                          {"window", {ev->window.from, ev->window.to}}});
    } else if (const auto* ce = std::get_if<CloseEdgeOverlay>(&overlay)) {
      overlays.push_back({{"type", "close_edge"}, {"edge", ce->edge}, {"window", {ce->window.from, ce->window.to}}});
    } else if (const auto* se = std::get_if<SeasonOverlay>(&overlay)) {
      overlays.push_back({{"type", "season"}, {"multiplier", se->multiplier}});
    }
  }
  return {{"name", s.name}, {"overlays", std::move(overlays)}};
}

SimulationRequest simulation_request_from_json(const json& doc) {
  if (!doc.is_object()) invalid("simulation request must be a JSON object");
  SimulationRequest req;
  req.scenario = scenario_from_json(doc);
  req.params = params_from_json(doc.contains("params") ? doc["params"] : json(nullptr));
  return req;
}

json to_json(const SimulationRequest& request) {
  json out = to_json(request.scenario);
  out["params"] = to_json(request.params);
  return out;
}

std::string frame_to_ndjson_line(const SimFrame& f) {
  std::string out;
  out.reserve(64 + 24 * (f.population.size() + f.edge_flow.size()));
  out += "{\"step\":";
  out += std::to_string(f.step);
  out += ",\"arrivals\":";
  append_number(out, f.arrivals);
  out += ",\"departures\":";
  append_number(out, f.departures);
  out += ",\"population\":{";
  for (std::size_t i = 0; i < f.population.size(); ++i) {
    if (i) out += ',';
    append_string(out, f.layout->zones[i]);
    out += ':';
    append_number(out, f.population[i]);
  }
  out += "},\"edge_flow\":{";
  for (std::size_t i = 0; i < f.edge_flow.size(); ++i) {
    if (i) out += ',';
    append_string(out, f.layout->edges[i]);
    out += ':';
    append_number(out, f.edge_flow[i]);
  }
  out += "}}";
  return out;
}

std::string frames_to_ndjson(std::span<const SimFrame> frames) {
  std::string out;
  for (const auto& f : frames) {
    out += frame_to_ndjson_line(f);
    out += '\n';
  }
  return out;
}

std::vector<SimFrame> frames_from_ndjson(std::string_view text) {
  std::vector<SimFrame> frames;
  std::shared_ptr<SimLayout> layout;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw Error(Errc::MalformedJson, "frame line is not a JSON object");
    try {
      SimFrame f;
      f.step = doc.at("step").get<std::size_t>();
      f.arrivals = doc.at("arrivals").get<double>();
      f.departures = doc.at("departures").get<double>();
      auto next = std::make_shared<SimLayout>();
      for (const auto& [k, v] : doc.at("population").items()) {
        next->zones.push_back(k);
        f.population.push_back(v.get<double>());
      }
      for (const auto& [k, v] : doc.at("edge_flow").items()) {
        next->edges.push_back(k);
        f.edge_flow.push_back(v.get<double>());
      }
      if (!layout || layout->zones != next->zones || layout->edges != next->edges) layout = next;
      f.layout = layout;
      frames.push_back(std::move(f));
    } catch (const json::exception& e) {
      throw Error(Errc::MalformedJson, std::string("frame line: ") + e.what());
    }
  }
  return frames;
}

json to_json(const ZoneDelta& d) {
  return {{"zone", d.zone}, {"mean_delta", d.mean_delta}, {"peak_delta", d.peak_delta}, {"peak_step", d.peak_step}};
}

}  // namespace htwin
