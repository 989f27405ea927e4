#include <cstdlib>
#include <fstream>

#include "doctest.h"
#include "htwin/config.hpp"
#include "htwin/error.hpp"
#include "support.hpp"

using namespace htwin;
using namespace htwin::test;
namespace fs = std::filesystem;

namespace {

std::optional<Errc> config_error(std::string_view text) {
  try {
    config_from_toml(text, "/tmp");
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("toml subset") {
  const auto doc = parse_toml(R"(# header
name = "a \"quoted\" \\ value" # trailing comment
count = 1_000
ratio = -2.5e-1
on = true
off = false

[table]
key = "x#y"
)");
  CHECK(doc["name"] == "a \"quoted\" \\ value");
  CHECK(doc["count"] == 1000);
  CHECK(doc["ratio"].get<double>() == -0.25);
  CHECK(doc["on"] == true);
  CHECK(doc["off"] == false);
  CHECK(doc["table"]["key"] == "x#y");

  for (const char* bad : {"novalue", "x = ", "x = \"open", "[broken", "x = 1\nx = 2", "x = what"}) {
    CHECK_THROWS_AS(parse_toml(bad), Error);
  }
  try {
    parse_toml("a = 1\nb = @");
    FAIL("expected a Config error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Config);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("service config keys") {
  const auto c = config_from_toml(R"(
listen = "0.0.0.0:9090"
bin_width = 900
tau = 1.5
k = 4
reference_zone = "Z01"
workers = 3
data_dir = "data"
zones = "geo/zones.geojson"
registry = "/abs/registry.json"
assets = "assets.json"
auth_token = "s3cret"
[variances]
camera = 9.0
wifi_bt = 64
)",
                                  "/srv/twin");
  CHECK(c.host == "0.0.0.0");
  CHECK(c.port == 9090);
  CHECK(c.bin_width.count() == 900);
  CHECK(c.tau == 1.5);
  CHECK(c.k == 4);
  CHECK(c.reference_zone == "Z01");
  CHECK(c.workers == 3);
  CHECK(c.data_dir == fs::path("/srv/twin/data"));
  CHECK(c.zones_path == fs::path("/srv/twin/data/geo/zones.geojson"));
  CHECK(c.graph_path == fs::path("/srv/twin/data/graph.geojson"));
  CHECK(c.registry_path == fs::path("/abs/registry.json"));
  CHECK(c.assets_path == fs::path("/srv/twin/data/assets.json"));
  CHECK(c.auth_token == "s3cret");

  const auto a = c.analytics();
  CHECK(a.default_variance.at(SourceKind::Camera) == 9.0);
  CHECK(a.default_variance.at(SourceKind::WifiBt) == 64.0);
  CHECK(a.default_variance.at(SourceKind::Statistical) == 400.0);
  CHECK(a.bin_width.count() == 900);
  CHECK(a.k == 4);

  const auto defaults = config_from_toml("", "/x");
  CHECK(defaults.port == 8080);
  CHECK(defaults.host == "127.0.0.1");
  CHECK(defaults.bin_width.count() == 300);
  CHECK_FALSE(defaults.auth_token);
}

TEST_CASE("config validation") {
  CHECK(config_error("bin_width = 120") == Errc::Config);
  CHECK(config_error("tau = 0") == Errc::Config);
  CHECK(config_error("k = 0") == Errc::Config);
  CHECK(config_error("workers = 0") == Errc::Config);
  CHECK(config_error("listen = \"nohost\"") == Errc::Config);
  CHECK(config_error("listen = \"h:99999\"") == Errc::Config);
  CHECK(config_error("colour = \"red\"") == Errc::Config);
  CHECK(config_error("tau = \"high\"") == Errc::Config);
  CHECK(config_error("[variances]\nenvironmental = 1") == Errc::Config);
  CHECK(config_error("[variances]\ncamera = -1") == Errc::Config);
}

TEST_CASE("config file resolution order") {
  TempDir dir;
  const fs::path a = dir.path() / "a.toml", b = dir.path() / "b.toml";
  write_file(a, "k = 5\n");
  write_file(b, "k = 6\ndata_dir = \"sub\"\n");

  ::unsetenv(kConfigEnvVar);
  CHECK(resolve_config_path(a.string()) == a);
  ::setenv(kConfigEnvVar, b.c_str(), 1);
  CHECK(resolve_config_path(std::nullopt) == b);
  CHECK(resolve_config_path(a.string()) == a);
  CHECK(load_config(resolve_config_path(std::nullopt)).k == 6);
  CHECK(load_config(b).data_dir == fs::weakly_canonical(dir.path() / "sub"));

  ::setenv(kConfigEnvVar, (dir.path() / "missing.toml").c_str(), 1);
  CHECK_THROWS_AS(resolve_config_path(std::nullopt), Error);
  ::unsetenv(kConfigEnvVar);

  const fs::path cwd = fs::current_path();
  fs::current_path(dir.path());
  CHECK_THROWS_AS(resolve_config_path(std::nullopt), Error);
  write_file(dir.path() / kDefaultConfigName, "k = 7\n");
  CHECK(load_config(resolve_config_path(std::nullopt)).k == 7);
  fs::current_path(cwd);

  CHECK_THROWS_AS(load_config(dir.path() / "nope.toml"), Error);
}
