#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "htwin/harmonize.hpp"
#include "htwin/types.hpp"
#include "json.hpp"

namespace htwin {

enum class AssetCategory { Building, Monument, Square, Church, Museum, Other };

std::string_view to_string(AssetCategory c) noexcept;
std::optional<AssetCategory> parse_asset_category(std::string_view text) noexcept;

struct HeritageAsset {
  std::string asset_id;
  std::string name;
  ZoneId zone;
  AssetCategory category = AssetCategory::Other;
  std::string condition_note;
  GeoPoint location;

  friend bool operator==(const HeritageAsset&, const HeritageAsset&) = default;
};

struct AppRecord {
  std::string ns;
  std::string key;
  nlohmann::json value;
};

enum class ViewAggregate { Mean, Min, Max, Sum, Last };
std::optional<ViewAggregate> parse_view_aggregate(std::string_view text) noexcept;

/// Everything one ingestion batch writes, applied all-or-nothing.
struct StoreCommit {
  std::vector<std::string> raw_lines;
  std::vector<std::string> reading_ids;
  std::map<SeriesKey, std::vector<TimeSeriesBin>> bins;
  std::vector<OutlierFlag> flags;
};

/// Embedded repository: per-series bins, the raw reading log, heritage
/// assets and application records.
///
/// Writers are serialized; every write builds a new immutable state and
/// publishes it with a pointer swap, so readers never see a partial write.
/// With a data directory, the raw log is appended to `raw/readings.ndjson`
/// and a snapshot is rewritten to `store.snap` before the swap.
class Store {
 public:
  Store();
  /// Opens (and restores, if present) a durable store rooted at `data_dir`.
  explicit Store(std::filesystem::path data_dir);

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  // Time series.

  /// bin_start must be >= the last stored bin_start; equal starts merge by
  /// the metric's aggregation rule. Throws Error(OutOfOrder).
  void append(const SeriesKey& key, const TimeSeriesBin& bin);
  /// Half-open [from, to). Throws Error(BadRange) when from > to.
  std::vector<TimeSeriesBin> query_range(const SeriesKey& key, Instant from, Instant to) const;
  std::vector<TimeSeriesBin> series(const SeriesKey& key) const;
  std::optional<TimeSeriesBin> last_bin(const SeriesKey& key) const;
  std::optional<TimeSeriesBin> latest_at_or_before(const SeriesKey& key, Instant at) const;
  std::vector<SeriesKey> keys() const;
  std::optional<std::pair<Instant, Instant>> time_extent() const;

  /// Aggregate over every source kind of (zone, metric) inside [from, to).
  std::optional<double> zone_view(const ZoneId& zone, Metric metric, Instant from, Instant to,
                                  ViewAggregate agg) const;

  // Raw data zone.

  bool has_reading(const std::string& reading_id) const;
  std::size_t reading_count() const;
  std::vector<OutlierFlag> outlier_flags() const;

  class Writer;
  /// Exclusive writer session; blocks other writers, never readers.
  Writer writer();

  // Heritage and application data.

  /// Throws Error(DuplicateAsset | ZoneMismatch).
  void register_asset(const HeritageAsset& asset, const ZoneSet& zones);
  /// Sorted by asset_id.
  std::vector<HeritageAsset> list_assets(const std::optional<ZoneId>& zone = std::nullopt) const;

  void put_record(const std::string& ns, const std::string& key, nlohmann::json value);
  std::optional<nlohmann::json> get_record(const std::string& ns, const std::string& key) const;
  std::vector<AppRecord> list_records(const std::string& ns) const;

  // Durability.

  std::string snapshot_bytes() const;
  /// Throws Error(Io).
  void snapshot(const std::filesystem::path& path) const;
  /// Throws Error(Io | CorruptSnapshot); leaves the store unchanged on error.
  void restore(const std::filesystem::path& path);
  void restore_bytes(std::string_view bytes);

  const std::optional<std::filesystem::path>& data_dir() const noexcept { return data_dir_; }
  std::filesystem::path raw_log_path() const;
  std::filesystem::path snapshot_path() const;

 private:
  struct State;
  std::shared_ptr<const State> load() const;
  void publish(std::shared_ptr<const State> next, const std::vector<std::string>& raw_lines);

  mutable std::mutex state_mu_;
  std::shared_ptr<const State> state_;
  std::mutex writer_mu_;
  std::optional<std::filesystem::path> data_dir_;
};

class Store::Writer {
 public:
  bool has_reading(const std::string& reading_id) const;
  std::optional<Instant> last_bin_start(const SeriesKey& key) const;
  /// Throws Error(OutOfOrder) or Error(StoreUnavailable) without side effects.
  void commit(const StoreCommit& commit);

 private:
  friend class Store;
  Writer(Store& store, std::unique_lock<std::mutex> lock);
  Store* store_;
  std::unique_lock<std::mutex> lock_;
  std::shared_ptr<const State> base_;
};

}  // namespace htwin
