#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "htwin/analytics.hpp"

namespace htwin::test {

// Closed-form inverse-variance oracle, written independently of the library.
inline std::pair<double, double> fusion_oracle(const std::vector<PersonEstimate>& e, double area) {
  long double num = 0, den = 0;
  for (const auto& x : e) {
    num += static_cast<long double>(x.persons) / x.variance;
    den += 1.0L / x.variance;
  }
  const long double mean = num / den;
  return {static_cast<double>(std::max(0.0L, mean) / area), static_cast<double>(1.0L / den / (area * area))};
}

// O(n^2) scan over every window [i, j]; keeps the windows that qualify and
// cannot be extended on either side.
inline std::vector<Hotspot> hotspot_oracle(const ZoneId& zone, const std::vector<DensityPoint>& s, double tau, int k,
                                           Seconds width) {
  auto ok = [&](std::size_t i, std::size_t j) {
    for (std::size_t m = i; m <= j; ++m) {
      if (s[m].density < tau) return false;
      if (m > i && s[m].bin_start - s[m - 1].bin_start != width) return false;
    }
    return true;
  };
  std::vector<Hotspot> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i; j < s.size(); ++j) {
      if (!ok(i, j)) break;  // any longer window from i fails too
      const bool left = i > 0 && ok(i - 1, j);
      const bool right = j + 1 < s.size() && ok(i, j + 1);
      if (left || right || j - i + 1 < static_cast<std::size_t>(k)) continue;
      double peak = 0;
      for (std::size_t m = i; m <= j; ++m) peak = std::max(peak, s[m].density);
      out.push_back({zone, s[i].bin_start, s[j].bin_start, peak});
    }
  }
  return out;
}

}  // namespace htwin::test
