#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "htwin/types.hpp"

namespace htwin {

/// Bin width restricted to a fixed menu so bin_start alignment is canonical.
class BinWidth {
 public:
  static constexpr std::array<long, 4> kAllowed{60, 300, 900, 3600};

  /// Throws Error(BadBinWidth) for anything outside {60, 300, 900, 3600} s.
  explicit BinWidth(Seconds width);
  BinWidth() : seconds_(300) {}

  Seconds seconds() const noexcept { return seconds_; }
  long count() const noexcept { return static_cast<long>(seconds_.count()); }
  Instant floor(Instant t) const noexcept;

  friend bool operator==(const BinWidth&, const BinWidth&) = default;

 private:
  Seconds seconds_;
};

struct BinnedSeries {
  BinWidth width;
  std::vector<TimeSeriesBin> bins;
};

enum class OutlierRule { Mad, RangeFallback };

struct OutlierFlag {
  std::string reading_id;
  double modified_z = 0.0;
  OutlierRule rule = OutlierRule::Mad;

  friend bool operator==(const OutlierFlag&, const OutlierFlag&) = default;
};

inline constexpr double kModifiedZThreshold = 3.5;
inline constexpr std::size_t kMinOutlierWindow = 5;

double median(std::vector<double> values);
/// Median absolute deviation around the median.
double median_abs_deviation(std::span<const double> values);

/// Indices i with |0.6745 (x_i - median) / MAD| > 3.5. Empty for windows
/// shorter than five values or when MAD is zero.
std::vector<std::size_t> detect_outliers(std::span<const double> window);

/// Modified z-score of every element; all zero when MAD is zero.
std::vector<double> modified_z_scores(std::span<const double> window);

/// Hampel-style filter: each value is judged inside a window of `width`
/// neighbours (shifted at the edges). Returns flagged indices ascending.
std::vector<std::size_t> rolling_outliers(std::span<const double> values, std::size_t width = 11);

/// Readings must share a series key and be time ordered.
/// Throws Error(InvalidArgument) if they do not.
std::vector<TimeSeriesBin> bin_series(std::span<const SensorReading> readings, BinWidth width);

struct AlignedPair {
  Instant bin_start{};
  double a = 0.0;
  double b = 0.0;
};

/// Inner join on bin_start. Throws Error(BinWidthMismatch).
std::vector<AlignedPair> align(const BinnedSeries& a, const BinnedSeries& b);

struct HarmonizedBatch {
  std::map<SeriesKey, std::vector<TimeSeriesBin>> bins;
  std::vector<OutlierFlag> flags;
};

/// Full pipeline over validated, zone-resolved readings: per-sensor rolling
/// outlier removal, then per-series binning.
HarmonizedBatch harmonize(std::span<const SensorReading> readings, BinWidth width,
                          std::size_t outlier_window = 11);

}  // namespace htwin
