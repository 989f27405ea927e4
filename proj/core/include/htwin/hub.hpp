#pragma once

#include <memory>

#include "htwin/analytics.hpp"
#include "htwin/config.hpp"
#include "htwin/geo.hpp"
#include "htwin/gis_export.hpp"
#include "htwin/ingest.hpp"
#include "htwin/store.hpp"
#include "json.hpp"

namespace htwin {

/// {asset_id, name, category, condition_note?, lon, lat, zone?}; a missing
/// zone is located from the position. Throws Error(MissingField |
/// InvalidArgument | UnknownZone).
HeritageAsset asset_from_json(const nlohmann::json& doc, const ZoneSet& zones);
nlohmann::json to_json(const HeritageAsset& asset);

/// The loaded twin: zones, street graph, sensor registry, the store and the
/// analytics bound to them. Not copyable or movable; components hold
/// references into each other.
class Hub {
 public:
  Hub(ZoneSet zones, std::unique_ptr<Store> store, AnalyticsConfig config);
  Hub(const Hub&) = delete;
  Hub& operator=(const Hub&) = delete;

  /// Loads every file named by the config and opens the durable store in
  /// its data directory. Assets already in the store are kept; a file entry
  /// with an id the store holds must be identical. Throws Error.
  static std::unique_ptr<Hub> open(const ServiceConfig& config);

  void set_graph(StreetGraph graph) { graph_ = std::move(graph); }
  void set_registry(SensorRegistry registry) { registry_ = std::move(registry); }
  void set_clock(Ingestor::Clock clock) { clock_ = std::move(clock); }

  const ZoneSet& zones() const noexcept { return zones_; }
  const StreetGraph& graph() const noexcept { return graph_; }
  const SensorRegistry& registry() const noexcept { return registry_; }
  Store& store() noexcept { return *store_; }
  const Store& store() const noexcept { return *store_; }
  const Analyzer& analyzer() const noexcept { return analyzer_; }
  BinWidth bin_width() const noexcept { return analyzer_.config().bin_width; }
  Instant now() const { return clock_(); }

  Ingestor ingestor() { return Ingestor(zones_, registry_, *store_, bin_width(), clock_); }
  LayerExporter exporter() const { return LayerExporter(zones_, graph_, registry_, *store_, analyzer_); }

  /// Registers the assets of a JSON array, skipping identical ones already
  /// stored. Returns the number added.
  std::size_t load_assets(const nlohmann::json& doc);

 private:
  ZoneSet zones_;
  StreetGraph graph_;
  SensorRegistry registry_;
  std::unique_ptr<Store> store_;
  Analyzer analyzer_;
  Ingestor::Clock clock_ = &Ingestor::system_now;
};

}  // namespace htwin
