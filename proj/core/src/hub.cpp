#include "htwin/hub.hpp"

#include <algorithm>

#include "htwin/error.hpp"
#include "htwin/geojson_io.hpp"

namespace htwin {

using nlohmann::json;

HeritageAsset asset_from_json(const json& doc, const ZoneSet& zones) {
  if (!doc.is_object()) throw Error(Errc::InvalidArgument, "asset must be a JSON object");
  auto text = [&](const char* key, bool required) -> std::string {
    if (!doc.contains(key) || doc[key].is_null()) {
      if (required) throw Error(Errc::MissingField, std::string("asset needs '") + key + "'");
      return {};
    }
    if (!doc[key].is_string()) throw Error(Errc::InvalidArgument, std::string("asset '") + key + "' must be a string");
    return doc[key].get<std::string>();
  };
  auto coord = [&](const char* key) {
    if (!doc.contains(key)) throw Error(Errc::MissingField, std::string("asset needs '") + key + "'");
    if (!doc[key].is_number()) throw Error(Errc::InvalidArgument, std::string("asset '") + key + "' must be a number");
    return doc[key].get<double>();
  };

  HeritageAsset a;
  a.asset_id = text("asset_id", true);
  if (a.asset_id.empty()) throw Error(Errc::InvalidArgument, "asset_id is empty");
  a.name = text("name", true);
  const auto category = text("category", false);
  if (!category.empty()) {
    const auto parsed = parse_asset_category(category);
    if (!parsed) throw Error(Errc::InvalidArgument, "unknown asset category '" + category + "'");
    a.category = *parsed;
  }
  a.condition_note = text("condition_note", false);
  a.location = {coord("lon"), coord("lat")};
  if (!a.location.valid()) throw Error(Errc::InvalidArgument, "asset position out of range");
  a.zone = text("zone", false);
  if (a.zone.empty()) {
    const auto located = zones.locate(a.location);
    if (!located) throw Error(Errc::UnknownZone, "asset " + a.asset_id + " lies outside every zone");
    a.zone = *located;
  } else if (!zones.contains(a.zone)) {
    throw Error(Errc::UnknownZone, "asset " + a.asset_id + " names unknown zone '" + a.zone + "'");
  }
  return a;
}

json to_json(const HeritageAsset& a) {
  return {{"asset_id", a.asset_id}, {"name", a.name},     {"zone", a.zone}, {"category", to_string(a.category)},
          {"condition_note", a.condition_note}, {"lon", a.location.lon}, {"lat", a.location.lat}};
}

Hub::Hub(ZoneSet zones, std::unique_ptr<Store> store, AnalyticsConfig config)
    : zones_(std::move(zones)), store_(std::move(store)), analyzer_(zones_, registry_, *store_, std::move(config)) {}

std::unique_ptr<Hub> Hub::open(const ServiceConfig& config) {
  try {
    ZoneSet zones = zones_from_geojson(read_json_file(config.zones_path));
    auto hub = std::make_unique<Hub>(std::move(zones), std::make_unique<Store>(config.data_dir), config.analytics());
    hub->set_graph(graph_from_geojson(read_json_file(config.graph_path), hub->zones()));
    hub->set_registry(SensorRegistry::from_json(read_json_file(config.registry_path), hub->zones()));
    if (config.assets_path) hub->load_assets(read_json_file(*config.assets_path));
    return hub;
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedJson, e.what());
  }
}

std::size_t Hub::load_assets(const json& doc) {
  if (!doc.is_array()) throw Error(Errc::InvalidArgument, "assets file must hold a JSON array");
  std::size_t added = 0;
  for (const auto& entry : doc) {
    const HeritageAsset asset = asset_from_json(entry, zones_);
    const auto existing = store_->list_assets(asset.zone);
    const auto same = std::find_if(existing.begin(), existing.end(),
                                   [&](const HeritageAsset& e) { return e.asset_id == asset.asset_id; });
    if (same != existing.end() && *same == asset) continue;
    store_->register_asset(asset, zones_);
    ++added;
  }
  return added;
}

}  // namespace htwin
