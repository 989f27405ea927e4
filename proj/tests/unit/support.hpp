#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "htwin/geo.hpp"
#include "htwin/time.hpp"

namespace htwin::test {

inline constexpr GeoPoint kOrigin{-38.51, -12.972};

/// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("htwin-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Ring of an axis-aligned rectangle given in local metres around kOrigin.
inline std::vector<GeoPoint> rect(double x0, double y0, double x1, double y1) {
  return {from_local({x0, y0}, kOrigin), from_local({x1, y0}, kOrigin), from_local({x1, y1}, kOrigin),
          from_local({x0, y1}, kOrigin)};
}

inline Zone rect_zone(const std::string& id, double x0, double y0, double x1, double y1) {
  return Zone(id, id, rect(x0, y0, x1, y1), kOrigin);
}

/// Row of `n` 100 m x 100 m zones "A", "B", ... sharing edges.
inline ZoneSet zone_row(std::size_t n) {
  std::vector<Zone> zones;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) * 100.0;
    zones.push_back(rect_zone(std::string(1, static_cast<char>('A' + i)), x, 0, x + 100, 100));
  }
  return ZoneSet(std::move(zones), kOrigin);
}

inline GeoPoint local(double x, double y) { return from_local({x, y}, kOrigin); }

inline Instant t0() { return from_unix(1717200000); }  // 2024-06-01T00:00:00Z

}  // namespace htwin::test
