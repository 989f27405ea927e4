#include "htwin/flowsim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "htwin/error.hpp"

namespace htwin {

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::InvalidScenario, what); }

void check_fraction(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) invalid(std::string(name) + " must lie in [0, 1]");
}

void check_multiplier(double v, const std::string& where) {
  if (!(v >= 0.0) || !std::isfinite(v)) invalid(where + " multiplier must be finite and >= 0");
}

void check_window(const StepWindow& w, std::size_t steps, const std::string& where) {
  if (w.from >= w.to || w.to > steps) {
    invalid(where + " window [" + std::to_string(w.from) + ", " + std::to_string(w.to) + ") must lie within [0, " +
            std::to_string(steps) + ")");
  }
}

// Stream ids keep the random draws of different model terms independent.
enum Stream : std::uint64_t { kOutflow = 1, kSplit = 2, kDeparture = 3, kArrival = 4 };

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t step, std::uint64_t stream) noexcept
    : key_(splitmix64(splitmix64(splitmix64(seed) ^ step) ^ stream)) {}

std::uint64_t CounterRng::next_u64() noexcept { return splitmix64(key_ ^ splitmix64(counter_++)); }

double CounterRng::next_double() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t CounterRng::poisson(double mean) noexcept {
  if (!(mean > 0.0)) return 0;
  std::uint64_t total = 0;
  // Knuth's product method on chunks small enough that exp(-chunk) is exact
  // enough and never underflows.
  while (mean > 0.0) {
    const double chunk = std::min(mean, 30.0);
    mean -= chunk;
    const double limit = std::exp(-chunk);
    double product = next_double();
    while (product > limit) {
      ++total;
      product *= next_double();
    }
  }
  return total;
}

std::uint64_t CounterRng::binomial(std::uint64_t trials, double p) noexcept {
  if (trials == 0 || !(p > 0.0)) return 0;
  if (p >= 1.0) return trials;
  if (p > 0.5) return trials - binomial(trials, 1.0 - p);
  const double q = 1.0 - p;
  const double ratio = p / q;
  std::uint64_t total = 0;
  // Inversion on chunks of at most 500 trials keeps q^n far from underflow.
  while (trials > 0) {
    const std::uint64_t n = std::min<std::uint64_t>(trials, 500);
    trials -= n;
    const double u = next_double();
    double prob = std::pow(q, static_cast<double>(n));
    double cdf = prob;
    std::uint64_t k = 0;
    while (u > cdf && k < n) {
      ++k;
      prob *= ratio * static_cast<double>(n - k + 1) / static_cast<double>(k);
      cdf += prob;
    }
    total += k;
  }
  return total;
}

double SimFrame::total_population() const noexcept {
  return std::accumulate(population.begin(), population.end(), 0.0);
}

FlowSimulator::FlowSimulator(const StreetGraph& graph, SimParams params, std::optional<ScenarioSpec> scenario)
    : graph_(graph), params_(std::move(params)), scenario_(scenario.value_or(ScenarioSpec{})) {
  auto layout = std::make_shared<SimLayout>();
  layout->zones = graph_.zone_ids();
  for (const auto& e : graph_.edges()) layout->edges.push_back(e.id);
  layout_ = layout;

  const auto& zones = layout_->zones;
  auto zone_index = [&](const ZoneId& id) -> std::optional<std::size_t> {
    auto it = std::lower_bound(zones.begin(), zones.end(), id);
    if (it == zones.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - zones.begin());
  };

  check_fraction(params_.outflow_fraction, "outflow fraction");
  check_fraction(params_.departure_fraction, "departure fraction");
  if (!(params_.cost_decay >= 0.0) || !std::isfinite(params_.cost_decay)) invalid("cost decay must be >= 0");

  base_attractiveness_.assign(zones.size(), 1.0);
  for (const auto& [id, a] : params_.base_attractiveness) {
    const auto idx = zone_index(id);
    if (!idx) invalid("unknown zone '" + id + "' in base attractiveness");
    if (!(a >= 0.0) || !std::isfinite(a)) invalid("attractiveness of zone '" + id + "' must be >= 0");
    base_attractiveness_[*idx] = a;
  }
  for (const auto& [id, p] : params_.initial_population) {
    if (!zone_index(id)) invalid("unknown zone '" + id + "' in initial population");
    if (!(p >= 0.0) || !std::isfinite(p)) invalid("initial population of zone '" + id + "' must be >= 0");
  }

  departure_zone_.assign(zones.size(), false);
  for (const auto& n : graph_.nodes()) {
    if (n.is_gateway) departure_zone_[*zone_index(n.zone)] = true;
  }
  for (const auto& [node_id, rate] : params_.gateway_arrival_rate) {
    const GraphNode* node = graph_.find_node(node_id);
    if (!node) invalid("unknown gateway node '" + node_id + "'");
    if (!node->is_gateway) invalid("node '" + node_id + "' is not a gateway");
    if (!(rate >= 0.0) || !std::isfinite(rate)) invalid("arrival rate at '" + node_id + "' must be >= 0");
    gateways_.emplace_back(*zone_index(node->zone), rate);
  }

  for (const auto& overlay : scenario_.overlays) {
    if (const auto* ev = std::get_if<EventOverlay>(&overlay)) {
      if (!zone_index(ev->zone)) invalid("unknown zone '" + ev->zone + "' in event overlay");
      check_multiplier(ev->multiplier, "event on zone '" + ev->zone + "'");
      check_window(ev->window, params_.steps, "event on zone '" + ev->zone + "'");
    } else if (const auto* ce = std::get_if<CloseEdgeOverlay>(&overlay)) {
      if (!graph_.find_edge(ce->edge)) invalid("unknown edge '" + ce->edge + "' in close-edge overlay");
      check_window(ce->window, params_.steps, "closure of edge '" + ce->edge + "'");
    } else if (const auto* se = std::get_if<SeasonOverlay>(&overlay)) {
      check_multiplier(se->multiplier, "season");
      season_ *= se->multiplier;
    }
  }

  // Group parallel edges by unordered zone pair.
  pair_edges_.assign(zones.size(), {});
  std::map<std::pair<std::size_t, std::size_t>, std::vector<Link>> pairs;
  for (std::size_t e = 0; e < graph_.edges().size(); ++e) {
    const auto& edge = graph_.edges()[e];
    const std::size_t za = *zone_index(graph_.find_node(edge.a)->zone);
    const std::size_t zb = *zone_index(graph_.find_node(edge.b)->zone);
    if (za == zb) continue;
    pairs[{std::min(za, zb), std::max(za, zb)}].push_back({std::max(za, zb), edge.walk_cost, e});
  }
  for (auto& [key, links] : pairs) {
    std::stable_sort(links.begin(), links.end(), [](const Link& a, const Link& b) { return a.cost < b.cost; });
    for (const auto& l : links) pair_edges_[key.first].push_back(l);
  }
  rebuild_topology(std::vector<bool>(graph_.edges().size(), true));
}

void FlowSimulator::rebuild_topology(const std::vector<bool>& open) {
  const std::size_t n = layout_->zones.size();
  topology_.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    // pair_edges_[i] holds links to j > i grouped by j and ordered by cost.
    std::map<std::size_t, Link> best;
    for (const auto& l : pair_edges_[i]) {
      if (!open[l.edge]) continue;
      best.try_emplace(l.zone, l);
    }
    for (const auto& [j, l] : best) {
      topology_[i].push_back({j, l.cost, l.edge});
      topology_[j].push_back({i, l.cost, l.edge});
    }
  }
  for (auto& links : topology_) {
    std::sort(links.begin(), links.end(), [](const Link& a, const Link& b) { return a.zone < b.zone; });
  }
  topology_open_ = open;
}

SimFrame FlowSimulator::initial_frame() const {
  SimFrame f;
  f.step = 0;
  f.layout = layout_;
  f.population.assign(layout_->zones.size(), 0.0);
  for (const auto& [id, p] : params_.initial_population) {
    const auto it = std::lower_bound(layout_->zones.begin(), layout_->zones.end(), id);
    f.population[static_cast<std::size_t>(it - layout_->zones.begin())] = params_.stochastic ? std::round(p) : p;
  }
  f.edge_flow.assign(layout_->edges.size(), 0.0);
  return f;
}

SimFrame FlowSimulator::step(std::size_t t, std::vector<double>& population) {
  const std::size_t n = layout_->zones.size();

  std::vector<bool> open(graph_.edges().size(), true);
  std::vector<double> attractiveness = base_attractiveness_;
  for (const auto& overlay : scenario_.overlays) {
    if (const auto* ev = std::get_if<EventOverlay>(&overlay); ev && ev->window.contains(t)) {
      const auto it = std::lower_bound(layout_->zones.begin(), layout_->zones.end(), ev->zone);
      attractiveness[static_cast<std::size_t>(it - layout_->zones.begin())] *= ev->multiplier;
    } else if (const auto* ce = std::get_if<CloseEdgeOverlay>(&overlay); ce && ce->window.contains(t)) {
      open[*graph_.edge_index(ce->edge)] = false;
    }
  }
  if (open != topology_open_) rebuild_topology(open);

  SimFrame frame;
  frame.step = t;
  frame.layout = layout_;
  frame.edge_flow.assign(graph_.edges().size(), 0.0);

  std::vector<double> next = population;
  std::vector<double> weights;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& links = topology_[i];
    if (links.empty() || population[i] <= 0.0) continue;
    weights.resize(links.size());
    double total = 0.0;
    for (std::size_t l = 0; l < links.size(); ++l) {
      weights[l] = attractiveness[links[l].zone] / std::pow(1.0 + links[l].cost, params_.cost_decay);
      total += weights[l];
    }
    if (!(total > 0.0)) continue;

    if (!params_.stochastic) {
      const double outflow = params_.outflow_fraction * population[i];
      double moved = 0.0;
      for (std::size_t l = 0; l < links.size(); ++l) {
        const double flow = outflow * (weights[l] / total);
        next[links[l].zone] += flow;
        frame.edge_flow[links[l].edge] += flow;
        moved += flow;
      }
      next[i] -= moved;
    } else {
      CounterRng out_rng(params_.seed, t, kOutflow * 0x10000 + i);
      std::uint64_t remaining = out_rng.binomial(static_cast<std::uint64_t>(population[i]), params_.outflow_fraction);
      next[i] -= static_cast<double>(remaining);
      CounterRng split_rng(params_.seed, t, kSplit * 0x10000 + i);
      double weight_left = total;
      for (std::size_t l = 0; l < links.size() && remaining > 0; ++l) {
        const bool last = l + 1 == links.size();
        const std::uint64_t k =
            last ? remaining : split_rng.binomial(remaining, std::min(1.0, weights[l] / weight_left));
        weight_left -= weights[l];
        remaining -= k;
        next[links[l].zone] += static_cast<double>(k);
        frame.edge_flow[links[l].edge] += static_cast<double>(k);
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!departure_zone_[i]) continue;
    double d = 0.0;
    if (params_.stochastic) {
      CounterRng rng(params_.seed, t, kDeparture * 0x10000 + i);
      d = static_cast<double>(rng.binomial(static_cast<std::uint64_t>(next[i]), params_.departure_fraction));
    } else {
      d = params_.departure_fraction * next[i];
    }
    next[i] -= d;
    frame.departures += d;
  }

  for (std::size_t g = 0; g < gateways_.size(); ++g) {
    const auto [zone, rate] = gateways_[g];
    const double mean = rate * season_;
    double a = mean;
    if (params_.stochastic) {
      CounterRng rng(params_.seed, t, kArrival * 0x10000 + g);
      a = static_cast<double>(rng.poisson(mean));
    }
    next[zone] += a;
    frame.arrivals += a;
  }

  for (auto& p : next) p = std::max(p, 0.0);
  population = next;
  frame.population = std::move(next);
  return frame;
}

void FlowSimulator::run(const std::function<void(const SimFrame&)>& sink) {
  if (params_.steps == 0) return;
  SimFrame first = initial_frame();
  std::vector<double> population = first.population;
  sink(first);
  for (std::size_t t = 1; t < params_.steps; ++t) sink(step(t, population));
}

std::vector<SimFrame> FlowSimulator::run() {
  std::vector<SimFrame> frames;
  frames.reserve(params_.steps);
  run([&](const SimFrame& f) { frames.push_back(f); });
  return frames;
}

std::vector<SimFrame> run_simulation(const StreetGraph& graph, const SimParams& params,
                                     const std::optional<ScenarioSpec>& scenario) {
  FlowSimulator sim(graph, params, scenario);
  return sim.run();
}

std::vector<ZoneDelta> compare(std::span<const SimFrame> baseline, std::span<const SimFrame> scenario) {
  if (baseline.size() != scenario.size()) {
    throw Error(Errc::ShapeMismatch, "frame counts differ: " + std::to_string(baseline.size()) + " vs " +
                                         std::to_string(scenario.size()));
  }
  if (baseline.empty()) return {};
  const auto& zones = baseline.front().layout->zones;
  if (scenario.front().layout->zones != zones) throw Error(Errc::ShapeMismatch, "zone sets differ");

  std::vector<ZoneDelta> out(zones.size());
  for (std::size_t z = 0; z < zones.size(); ++z) out[z].zone = zones[z];
  for (std::size_t t = 0; t < baseline.size(); ++t) {
    const auto& b = baseline[t];
    const auto& s = scenario[t];
    if (b.population.size() != zones.size() || s.population.size() != zones.size() || b.step != s.step) {
      throw Error(Errc::ShapeMismatch, "frame " + std::to_string(t) + " shapes differ");
    }
    for (std::size_t z = 0; z < zones.size(); ++z) {
      const double d = s.population[z] - b.population[z];
      out[z].mean_delta += d;
      if (std::abs(d) > std::abs(out[z].peak_delta)) {
        out[z].peak_delta = d;
        out[z].peak_step = b.step;
      }
    }
  }
  for (auto& d : out) d.mean_delta /= static_cast<double>(baseline.size());
  return out;
}

}  // namespace htwin
