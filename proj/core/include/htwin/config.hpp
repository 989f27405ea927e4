#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "htwin/analytics.hpp"
#include "json.hpp"

namespace htwin {

inline constexpr const char* kConfigEnvVar = "HERITAGE_TWIN_CONFIG";
inline constexpr const char* kDefaultConfigName = "heritage_twin.toml";

/// Reads the TOML subset used by the config file: `key = value` pairs,
/// `[table]` headers, basic strings, integers, floats, booleans and `#`
/// comments. Returns nested JSON objects. Throws Error(Config) with the line.
nlohmann::json parse_toml(std::string_view text);

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  BinWidth bin_width{};
  double tau = 2.0;
  int k = 3;
  std::optional<ZoneId> reference_zone;
  std::size_t workers = 2;
  /// Absolute after loading; the other paths are resolved against it.
  std::filesystem::path data_dir = ".";
  std::filesystem::path zones_path = "zones.geojson";
  std::filesystem::path graph_path = "graph.geojson";
  std::filesystem::path registry_path = "registry.json";
  std::optional<std::filesystem::path> assets_path;
  /// Reserved bearer-token hook; unset means open access.
  std::optional<std::string> auth_token;
  std::map<SourceKind, double> variances;

  AnalyticsConfig analytics() const;
};

/// `listen`, `bin_width`, `tau`, `k`, `reference_zone`, `workers`,
/// `data_dir`, `zones`, `graph`, `registry`, `assets`, `auth_token` and a
/// `[variances]` table keyed by source kind. `data_dir` is relative to
/// `base_dir`; file paths are relative to `data_dir`.
ServiceConfig config_from_toml(std::string_view text, const std::filesystem::path& base_dir);
ServiceConfig load_config(const std::filesystem::path& path);

/// Explicit path, else $HERITAGE_TWIN_CONFIG, else ./heritage_twin.toml.
/// Throws Error(Config) when the chosen file does not exist.
std::filesystem::path resolve_config_path(const std::optional<std::string>& explicit_path);

}  // namespace htwin
