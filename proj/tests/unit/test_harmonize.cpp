#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "htwin/error.hpp"
#include "htwin/harmonize.hpp"
#include "support.hpp"

using namespace htwin;
using namespace htwin::test;

namespace {

// Independent median/MAD oracle: sort and pick, no shared code.
double oracle_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<std::size_t> oracle_outliers(const std::vector<double>& v) {
  if (v.size() < 5) return {};
  const double med = oracle_median(v);
  std::vector<double> dev;
  for (double x : v) dev.push_back(std::abs(x - med));
  const double mad = oracle_median(dev);
  if (mad == 0.0) return {};
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (std::abs(0.6745 * (v[i] - med) / mad) > 3.5) out.push_back(i);
  }
  return out;
}

SensorReading reading(const std::string& id, Metric m, double v, std::int64_t t, const std::string& sensor = "s1") {
  SensorReading r;
  r.reading_id = id;
  r.sensor_id = sensor;
  r.metric = m;
  r.value = v;
  r.timestamp = from_unix(t);
  r.source = source_for(m);
  r.zone = "A";
  return r;
}

}  // namespace

TEST_CASE("median and MAD") {
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 3, 2}) == 2.5);
  const std::vector<double> v{10, 11, 10, 12, 11, 100};
  CHECK(median(v) == 11.0);
  CHECK(median_abs_deviation(v) == 1.0);
}

TEST_CASE("detect_outliers examples") {
  const std::vector<double> spike{10, 11, 10, 12, 11, 100};
  CHECK(detect_outliers(spike) == std::vector<std::size_t>{5});
  const auto z = modified_z_scores(spike);
  CHECK(z[5] == doctest::Approx(0.6745 * 89.0).epsilon(1e-12));

  CHECK(detect_outliers(std::vector<double>{7, 7, 7, 7, 7}).empty());
  CHECK(detect_outliers(std::vector<double>{1, 2, 3, 4, 5}).empty());
  const auto ramp = modified_z_scores(std::vector<double>{1, 2, 3, 4, 5});
  CHECK(*std::max_element(ramp.begin(), ramp.end()) == doctest::Approx(1.349));
  CHECK(detect_outliers(std::vector<double>{1, 1, 100, 1}).empty());  // window below 5
}

TEST_CASE("detect_outliers matches the oracle on random windows") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(20.0, 2.0);
  std::uniform_int_distribution<int> len(1, 30), spikes(0, 3);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> v(static_cast<std::size_t>(len(rng)));
    for (auto& x : v) x = std::round(noise(rng) * 10) / 10;
    for (int s = spikes(rng); s > 0 && !v.empty(); --s) v[rng() % v.size()] += 40.0;
    REQUIRE(detect_outliers(v) == oracle_outliers(v));
  }
}

TEST_CASE("rolling_outliers finds an isolated spike in a long trend") {
  std::vector<double> v;
  for (int i = 0; i < 200; ++i) v.push_back(20.0 + 0.01 * i + 0.1 * ((i * 7) % 5));
  v[120] += 15.0;
  CHECK(rolling_outliers(v) == std::vector<std::size_t>{120});
  CHECK(rolling_outliers(std::vector<double>{1, 2, 100}).empty());
}

TEST_CASE("BinWidth menu") {
  for (long w : {60L, 300L, 900L, 3600L}) CHECK(BinWidth(Seconds(w)).count() == w);
  CHECK_THROWS_AS(BinWidth(Seconds(120)), Error);
  CHECK(BinWidth().count() == 300);
  CHECK(to_unix(BinWidth().floor(from_unix(301))) == 300);
  CHECK(to_unix(BinWidth().floor(from_unix(-1))) == -300);
}

TEST_CASE("bin_series") {
  const BinWidth w;
  SUBCASE("mean for state variables") {
    const std::vector<SensorReading> r{reading("1", Metric::TemperatureC, 10, 0),
                                       reading("2", Metric::TemperatureC, 20, 10)};
    const auto bins = bin_series(r, w);
    REQUIRE(bins.size() == 1);
    CHECK(bins[0].value == 15.0);
    CHECK(bins[0].sample_count == 2);
  }
  SUBCASE("sum for counts") {
    const std::vector<SensorReading> r{reading("1", Metric::CameraCount, 3, 0),
                                       reading("2", Metric::CameraCount, 4, 10)};
    const auto bins = bin_series(r, w);
    REQUIRE(bins.size() == 1);
    CHECK(bins[0].value == 7.0);
    CHECK(bins[0].sample_count == 2);
  }
  SUBCASE("floor partition") {
    const std::vector<SensorReading> r{reading("1", Metric::TemperatureC, 1, 0),
                                       reading("2", Metric::TemperatureC, 2, 301)};
    const auto bins = bin_series(r, w);
    REQUIRE(bins.size() == 2);
    CHECK(to_unix(bins[0].bin_start) == 0);
    CHECK(to_unix(bins[1].bin_start) == 300);
  }
  SUBCASE("mixed keys and disorder are refused") {
    std::vector<SensorReading> r{reading("1", Metric::TemperatureC, 1, 0), reading("2", Metric::NoiseDb, 50, 10)};
    CHECK_THROWS_AS(bin_series(r, w), Error);
    r = {reading("1", Metric::TemperatureC, 1, 50), reading("2", Metric::TemperatureC, 2, 10)};
    CHECK_THROWS_AS(bin_series(r, w), Error);
  }
  SUBCASE("sample counts add up and bins are canonical") {
    std::mt19937_64 rng(9);
    std::vector<SensorReading> r;
    std::int64_t t = 0;
    for (int i = 0; i < 500; ++i) {
      t += static_cast<std::int64_t>(rng() % 200);
      r.push_back(reading(std::to_string(i), Metric::HumidityPct, 50, t));
    }
    const auto bins = bin_series(r, w);
    std::uint32_t total = 0;
    for (std::size_t i = 0; i < bins.size(); ++i) {
      total += bins[i].sample_count;
      CHECK(to_unix(bins[i].bin_start) % 300 == 0);
      if (i) CHECK(bins[i].bin_start > bins[i - 1].bin_start);
    }
    CHECK(total == 500u);
  }
}

TEST_CASE("align is an inner join") {
  auto series = [](std::vector<std::int64_t> starts) {
    BinnedSeries s;
    for (auto t : starts) s.bins.push_back({from_unix(t), static_cast<double>(t), 1});
    return s;
  };
  CHECK(align(series({0, 300}), series({0, 300})).size() == 2);
  CHECK(align(series({0, 300}), series({600, 900})).empty());
  const auto one = align(series({0, 300, 600}), series({300, 900}));
  REQUIRE(one.size() == 1);
  CHECK(to_unix(one[0].bin_start) == 300);
  BinnedSeries other = series({0});
  other.width = BinWidth(Seconds(60));
  CHECK_THROWS_AS(align(series({0}), other), Error);
}

TEST_CASE("harmonize removes flagged readings before binning") {
  std::vector<SensorReading> r;
  for (int i = 0; i < 30; ++i) r.push_back(reading("r" + std::to_string(i), Metric::TemperatureC, 25.0 + 0.1 * (i % 3), i * 30));
  r[14].value = 45.0;
  const auto batch = harmonize(r, BinWidth());
  REQUIRE(batch.flags.size() == 1);
  CHECK(batch.flags[0].reading_id == "r14");
  const auto& bins = batch.bins.at(r[0].series_key());
  std::uint32_t samples = 0;
  for (const auto& b : bins) {
    samples += b.sample_count;
    CHECK(b.value < 26.0);
  }
  CHECK(samples == 29u);
}
