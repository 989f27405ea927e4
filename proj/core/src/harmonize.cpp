#include "htwin/harmonize.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "htwin/error.hpp"

namespace htwin {

namespace {

constexpr double kMadScale = 0.6745;

bool earlier(const SensorReading& a, const SensorReading& b) {
  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
  return a.reading_id < b.reading_id;
}

}  // namespace

BinWidth::BinWidth(Seconds width) : seconds_(width) {
  if (std::find(kAllowed.begin(), kAllowed.end(), static_cast<long>(width.count())) == kAllowed.end()) {
    throw Error(Errc::BadBinWidth, "bin width must be one of 60, 300, 900, 3600 seconds, got " +
                                       std::to_string(width.count()));
  }
}

Instant BinWidth::floor(Instant t) const noexcept {
  const auto s = to_unix(t);
  const auto w = seconds_.count();
  auto q = s / w;
  if (s % w != 0 && s < 0) --q;
  return from_unix(q * w);
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(Errc::EmptyInput, "median of empty set");
  const std::size_t n = values.size();
  const std::size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

double median_abs_deviation(std::span<const double> values) {
  const double m = median({values.begin(), values.end()});
  std::vector<double> dev;
  dev.reserve(values.size());
  for (double v : values) dev.push_back(std::abs(v - m));
  return median(std::move(dev));
}

std::vector<double> modified_z_scores(std::span<const double> window) {
  std::vector<double> z(window.size(), 0.0);
  if (window.empty()) return z;
  const double m = median({window.begin(), window.end()});
  const double mad = median_abs_deviation(window);
  if (mad == 0.0) return z;
  for (std::size_t i = 0; i < window.size(); ++i) z[i] = kMadScale * (window[i] - m) / mad;
  return z;
}

std::vector<std::size_t> detect_outliers(std::span<const double> window) {
  std::vector<std::size_t> flagged;
  if (window.size() < kMinOutlierWindow) return flagged;
  const auto z = modified_z_scores(window);
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (std::abs(z[i]) > kModifiedZThreshold) flagged.push_back(i);
  }
  return flagged;
}

std::vector<std::size_t> rolling_outliers(std::span<const double> values, std::size_t width) {
  std::vector<std::size_t> flagged;
  const std::size_t n = values.size();
  if (n < kMinOutlierWindow) return flagged;
  const std::size_t w = std::clamp(width, kMinOutlierWindow, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t start = std::min(i >= w / 2 ? i - w / 2 : 0, n - w);
    const auto window = values.subspan(start, w);
    const double m = median({window.begin(), window.end()});
    const double mad = median_abs_deviation(window);
    if (mad == 0.0) continue;
    if (std::abs(kMadScale * (values[i] - m) / mad) > kModifiedZThreshold) flagged.push_back(i);
  }
  return flagged;
}

std::vector<TimeSeriesBin> bin_series(std::span<const SensorReading> readings, BinWidth width) {
  std::vector<TimeSeriesBin> out;
  if (readings.empty()) return out;
  const SeriesKey key = readings.front().series_key();
  const Aggregation agg = aggregation_for(key.metric);

  double sum = 0.0;
  std::uint32_t count = 0;
  Instant current = width.floor(readings.front().timestamp);
  auto flush = [&] {
    out.push_back({current, agg == Aggregation::Sum ? sum : sum / count, count});
  };

  Instant previous = readings.front().timestamp;
  for (const auto& r : readings) {
    if (!(r.series_key() == key)) throw Error(Errc::InvalidArgument, "bin_series given mixed series keys");
    if (r.timestamp < previous) throw Error(Errc::InvalidArgument, "bin_series input is not time ordered");
    previous = r.timestamp;
    const Instant b = width.floor(r.timestamp);
    if (b != current) {
      flush();
      current = b;
      sum = 0.0;
      count = 0;
    }
    sum += r.value;
    ++count;
  }
  flush();
  return out;
}

std::vector<AlignedPair> align(const BinnedSeries& a, const BinnedSeries& b) {
  if (!(a.width == b.width)) throw Error(Errc::BinWidthMismatch, "aligned series must share a bin width");
  std::vector<AlignedPair> out;
  auto ia = a.bins.begin();
  auto ib = b.bins.begin();
  while (ia != a.bins.end() && ib != b.bins.end()) {
    if (ia->bin_start < ib->bin_start) {
      ++ia;
    } else if (ib->bin_start < ia->bin_start) {
      ++ib;
    } else {
      out.push_back({ia->bin_start, ia->value, ib->value});
      ++ia;
      ++ib;
    }
  }
  return out;
}

HarmonizedBatch harmonize(std::span<const SensorReading> readings, BinWidth width, std::size_t outlier_window) {
  HarmonizedBatch batch;

  std::map<std::pair<std::string, Metric>, std::vector<const SensorReading*>> per_sensor;
  for (const auto& r : readings) per_sensor[{r.sensor_id, r.metric}].push_back(&r);

  std::unordered_set<const SensorReading*> dropped;
  std::vector<double> values;
  for (auto& [_, stream] : per_sensor) {
    std::sort(stream.begin(), stream.end(), [](auto* a, auto* b) { return earlier(*a, *b); });
    values.clear();
    for (const auto* r : stream) values.push_back(r->value);
    for (std::size_t idx : rolling_outliers(values, outlier_window)) {
      const std::size_t w = std::clamp(outlier_window, kMinOutlierWindow, values.size());
      const std::size_t start = std::min(idx >= w / 2 ? idx - w / 2 : 0, values.size() - w);
      const auto window = std::span<const double>(values).subspan(start, w);
      const double z = modified_z_scores(window)[idx - start];
      batch.flags.push_back({stream[idx]->reading_id, z, OutlierRule::Mad});
      dropped.insert(stream[idx]);
    }
  }
  std::sort(batch.flags.begin(), batch.flags.end(),
            [](const auto& a, const auto& b) { return a.reading_id < b.reading_id; });

  std::map<SeriesKey, std::vector<SensorReading>> per_series;
  for (const auto& r : readings) {
    if (!dropped.contains(&r)) per_series[r.series_key()].push_back(r);
  }
  for (auto& [key, series] : per_series) {
    std::sort(series.begin(), series.end(), earlier);
    batch.bins.emplace(key, bin_series(series, width));
  }
  return batch;
}

}  // namespace htwin
