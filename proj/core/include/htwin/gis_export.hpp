#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "htwin/analytics.hpp"
#include "htwin/flowsim.hpp"
#include "htwin/geo.hpp"
#include "htwin/ingest.hpp"
#include "htwin/store.hpp"
#include "json.hpp"

namespace htwin {

enum class LayerName { Zones, Sensors, Hotspots, Heritage, Flow };

std::string_view to_string(LayerName layer) noexcept;
std::optional<LayerName> parse_layer_name(std::string_view text) noexcept;

/// `<layer>_<unix-seconds>.geojson`
std::string layer_file_name(LayerName layer, Instant at);

/// Canonical text form of a FeatureCollection: one feature per line,
/// positions with exactly six decimals, polygon exterior rings
/// counterclockwise, property keys sorted. Parsing the output and writing it
/// again yields the same bytes.
std::string write_feature_collection(const nlohmann::json& collection);
std::string reserialize_layer(std::string_view geojson);

/// Builds the map layers from the repositories and the analytics views; each
/// property is read from the same query the HTTP API serves.
class LayerExporter {
 public:
  LayerExporter(const ZoneSet& zones, const StreetGraph& graph, const SensorRegistry& registry, const Store& store,
                const Analyzer& analyzer);

  nlohmann::json zones_layer(Instant at) const;
  nlohmann::json sensors_layer() const;
  nlohmann::json hotspots_layer(Instant from, Instant to) const;
  nlohmann::json heritage_layer() const;
  /// Throws Error(InvalidArgument) when no frame has `step`, and
  /// Error(ShapeMismatch) when the frames do not belong to this graph.
  nlohmann::json flow_layer(std::span<const SimFrame> frames, std::size_t step) const;

  std::string export_zones(Instant at) const { return write_feature_collection(zones_layer(at)); }
  std::string export_sensors() const { return write_feature_collection(sensors_layer()); }
  std::string export_hotspots(Instant from, Instant to) const {
    return write_feature_collection(hotspots_layer(from, to));
  }
  std::string export_heritage() const { return write_feature_collection(heritage_layer()); }
  std::string export_flow(std::span<const SimFrame> frames, std::size_t step) const {
    return write_feature_collection(flow_layer(frames, step));
  }

 private:
  const ZoneSet& zones_;
  const StreetGraph& graph_;
  const SensorRegistry& registry_;
  const Store& store_;
  const Analyzer& analyzer_;
};

}  // namespace htwin
