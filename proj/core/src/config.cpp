#include "htwin/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "htwin/error.hpp"

namespace htwin {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw Error(Errc::Config, "line " + std::to_string(line) + ": " + what);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool bare_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

// Parses a basic string starting at s[0] == '"'; returns the value and the
// remainder after the closing quote.
std::pair<std::string, std::string_view> basic_string(std::string_view s, std::size_t line) {
  std::string out;
  std::size_t i = 1;
  for (; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '"') return {out, s.substr(i + 1)};
    if (c != '\\') {
      out += c;
      continue;
    }
    if (++i >= s.size()) break;
    switch (s[i]) {
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case '"': out += '"'; break;
      case '\\': out += '\\'; break;
      default: fail(line, std::string("unsupported escape \\") + s[i]);
    }
  }
  fail(line, "unterminated string");
}

json scalar(std::string_view v, std::size_t line) {
  if (v == "true") return true;
  if (v == "false") return false;
  std::string digits;
  for (char c : v) {
    if (c != '_') digits += c;
  }
  if (digits.empty()) fail(line, "missing value");
  const bool is_float = digits.find_first_of(".eE") != std::string::npos;
  char* end = nullptr;
  if (is_float) {
    const double d = std::strtod(digits.c_str(), &end);
    if (*end == '\0') return d;
  } else {
    const long long n = std::strtoll(digits.c_str(), &end, 10);
    if (*end == '\0') return n;
  }
  fail(line, "unsupported value '" + std::string(v) + "'");
}

}  // namespace

json parse_toml(std::string_view text) {
  json root = json::object();
  json* table = &root;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;

    if (line.front() == '[') {
      const auto close = line.find(']');
      if (close == std::string_view::npos) fail(line_no, "unterminated table header");
      const auto name = trim(line.substr(1, close - 1));
      if (!bare_key(name)) fail(line_no, "unsupported table name");
      const auto rest = trim(line.substr(close + 1));
      if (!rest.empty() && rest.front() != '#') fail(line_no, "unexpected text after table header");
      const std::string key(name);
      if (root.contains(key)) fail(line_no, "table [" + key + "] defined twice");
      root[key] = json::object();
      table = &root[key];
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(line_no, "expected key = value");
    std::string key(trim(line.substr(0, eq)));
    if (key.size() >= 2 && key.front() == '"' && key.back() == '"') key = key.substr(1, key.size() - 2);
    if (key.empty()) fail(line_no, "empty key");
    if (table->contains(key)) fail(line_no, "duplicate key '" + key + "'");

    std::string_view value = trim(line.substr(eq + 1));
    if (value.empty()) fail(line_no, "missing value");
    if (value.front() == '"') {
      auto [s, rest] = basic_string(value, line_no);
      rest = trim(rest);
      if (!rest.empty() && rest.front() != '#') fail(line_no, "unexpected text after string");
      (*table)[key] = s;
    } else {
      const auto hash = value.find('#');
      if (hash != std::string_view::npos) value = trim(value.substr(0, hash));
      (*table)[key] = scalar(value, line_no);
    }
  }
  return root;
}

AnalyticsConfig ServiceConfig::analytics() const {
  AnalyticsConfig a;
  a.bin_width = bin_width;
  a.tau = tau;
  a.k = k;
  a.reference_zone = reference_zone;
  for (const auto& [kind, v] : variances) a.default_variance[kind] = v;
  return a;
}

namespace {

template <class T>
T get(const json& doc, const char* key, const char* kind) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(Errc::Config, std::string("'") + key + "' must be " + kind);
  }
}

}  // namespace

ServiceConfig config_from_toml(std::string_view text, const fs::path& base_dir) {
  const json doc = parse_toml(text);
  ServiceConfig c;
  static const std::set<std::string> known{"listen", "bin_width", "tau", "k", "reference_zone", "workers",
                                           "data_dir", "zones", "graph", "registry", "assets", "auth_token",
                                           "variances"};
  for (const auto& [key, _] : doc.items()) {
    if (!known.contains(key)) throw Error(Errc::Config, "unknown key '" + key + "'");
  }

  if (doc.contains("listen")) {
    const auto listen = get<std::string>(doc, "listen", "a \"host:port\" string");
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos || colon == 0) throw Error(Errc::Config, "listen must be host:port");
    c.host = listen.substr(0, colon);
    char* end = nullptr;
    const long port = std::strtol(listen.c_str() + colon + 1, &end, 10);
    if (*end != '\0' || port < 0 || port > 65535) throw Error(Errc::Config, "bad port in listen '" + listen + "'");
    c.port = static_cast<int>(port);
  }
  if (doc.contains("bin_width")) {
    const auto w = get<long long>(doc, "bin_width", "an integer number of seconds");
    try {
      c.bin_width = BinWidth(Seconds(w));
    } catch (const Error& e) {
      throw Error(Errc::Config, e.detail());
    }
  }
  if (doc.contains("tau")) {
    c.tau = get<double>(doc, "tau", "a number");
    if (!(c.tau > 0.0)) throw Error(Errc::Config, "tau must be positive");
  }
  if (doc.contains("k")) {
    c.k = get<int>(doc, "k", "an integer");
    if (c.k < 1) throw Error(Errc::Config, "k must be >= 1");
  }
  if (doc.contains("reference_zone")) c.reference_zone = get<std::string>(doc, "reference_zone", "a string");
  if (doc.contains("workers")) {
    const auto w = get<long long>(doc, "workers", "an integer");
    if (w < 1) throw Error(Errc::Config, "workers must be >= 1");
    c.workers = static_cast<std::size_t>(w);
  }
  if (doc.contains("auth_token")) c.auth_token = get<std::string>(doc, "auth_token", "a string");

  fs::path data_dir = doc.contains("data_dir") ? fs::path(get<std::string>(doc, "data_dir", "a path")) : fs::path(".");
  if (data_dir.is_relative()) data_dir = base_dir / data_dir;
  c.data_dir = fs::weakly_canonical(fs::absolute(data_dir));

  auto path_key = [&](const char* key, fs::path fallback) {
    fs::path p = doc.contains(key) ? fs::path(get<std::string>(doc, key, "a path")) : std::move(fallback);
    return p.is_relative() ? c.data_dir / p : p;
  };
  c.zones_path = path_key("zones", c.zones_path);
  c.graph_path = path_key("graph", c.graph_path);
  c.registry_path = path_key("registry", c.registry_path);
  if (doc.contains("assets")) c.assets_path = path_key("assets", {});

  if (doc.contains("variances")) {
    const json& v = doc["variances"];
    if (!v.is_object()) throw Error(Errc::Config, "variances must be a table");
    for (const auto& [name, value] : v.items()) {
      const auto kind = parse_source_kind(name);
      if (!kind || *kind == SourceKind::Environmental) {
        throw Error(Errc::Config, "variances: '" + name + "' is not a people-count source kind");
      }
      if (!value.is_number() || !(value.get<double>() > 0.0)) {
        throw Error(Errc::Config, "variances." + name + " must be a positive number");
      }
      c.variances[*kind] = value.get<double>();
    }
  }
  return c;
}

ServiceConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Config, "cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return config_from_toml(text.str(), fs::absolute(path).parent_path());
}

fs::path resolve_config_path(const std::optional<std::string>& explicit_path) {
  fs::path chosen;
  if (explicit_path && !explicit_path->empty()) {
    chosen = *explicit_path;
  } else if (const char* env = std::getenv(kConfigEnvVar); env && *env) {
    chosen = env;
  } else {
    chosen = kDefaultConfigName;
  }
  if (!fs::exists(chosen)) throw Error(Errc::Config, "config file not found: " + chosen.string());
  return chosen;
}

}  // namespace htwin
