#include "htwin/store.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "htwin/error.hpp"

namespace htwin {

namespace fs = std::filesystem;

std::string_view to_string(AssetCategory c) noexcept {
  switch (c) {
    case AssetCategory::Building: return "building";
    case AssetCategory::Monument: return "monument";
    case AssetCategory::Square: return "square";
    case AssetCategory::Church: return "church";
    case AssetCategory::Museum: return "museum";
    case AssetCategory::Other: return "other";
  }
  return "other";
}

std::optional<AssetCategory> parse_asset_category(std::string_view text) noexcept {
  for (auto c : {AssetCategory::Building, AssetCategory::Monument, AssetCategory::Square, AssetCategory::Church,
                 AssetCategory::Museum, AssetCategory::Other}) {
    if (to_string(c) == text) return c;
  }
  return std::nullopt;
}

std::optional<ViewAggregate> parse_view_aggregate(std::string_view text) noexcept {
  if (text == "mean") return ViewAggregate::Mean;
  if (text == "min") return ViewAggregate::Min;
  if (text == "max") return ViewAggregate::Max;
  if (text == "sum") return ViewAggregate::Sum;
  if (text == "last") return ViewAggregate::Last;
  return std::nullopt;
}

struct Store::State {
  std::map<SeriesKey, std::vector<TimeSeriesBin>> series;
  std::set<std::string> reading_ids;
  std::map<std::string, OutlierFlag> flags;
  std::map<std::string, HeritageAsset> assets;
  std::map<std::pair<std::string, std::string>, nlohmann::json> records;
};

namespace {

// Merges `bin` into `series` or throws OutOfOrder. Does not touch `series`
// on failure.
void merge_bin(std::vector<TimeSeriesBin>& series, const SeriesKey& key, const TimeSeriesBin& bin) {
  if (bin.sample_count == 0) throw Error(Errc::InvalidArgument, "bins need at least one sample");
  if (series.empty() || series.back().bin_start < bin.bin_start) {
    series.push_back(bin);
    return;
  }
  TimeSeriesBin& last = series.back();
  if (bin.bin_start < last.bin_start) {
    throw Error(Errc::OutOfOrder, to_string(key) + ": bin " + format_rfc3339(bin.bin_start) +
                                      " precedes stored bin " + format_rfc3339(last.bin_start));
  }
  const std::uint32_t count = last.sample_count + bin.sample_count;
  if (aggregation_for(key.metric) == Aggregation::Sum) {
    last.value += bin.value;
  } else {
    last.value = (last.value * last.sample_count + bin.value * bin.sample_count) / count;
  }
  last.sample_count = count;
}

auto lower(const std::vector<TimeSeriesBin>& s, Instant t) {
  return std::lower_bound(s.begin(), s.end(), t, [](const TimeSeriesBin& b, Instant v) { return b.bin_start < v; });
}

void check_range(Instant from, Instant to) {
  if (from > to) throw Error(Errc::BadRange, "range start " + format_rfc3339(from) + " after end " + format_rfc3339(to));
}

// Binary encoding helpers. Little-endian fixed-width integers; doubles as
// their IEEE-754 bit pattern.
class Encoder {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void raw(std::string_view s) { out_.append(s); }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Decoder {
 public:
  explicit Decoder(std::string_view in) : in_(in) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t u32() {
    auto b = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(b[i]);
    return v;
  }
  std::uint64_t u64() {
    auto b = take(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(b[i]);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = u32();
    return std::string(take(n));
  }
  std::string_view take(std::size_t n) {
    if (n > in_.size() - pos_) throw Error(Errc::CorruptSnapshot, "snapshot truncated");
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

constexpr std::string_view kMagic{"HTWSNAP\0", 8};
constexpr std::uint32_t kVersion = 1;

enum SectionTag : std::uint8_t {
  kSeries = 1,
  kReadingIds = 2,
  kOutliers = 3,
  kAssets = 4,
  kRecords = 5,
};

void section(Encoder& enc, SectionTag tag, Encoder& payload) {
  enc.u8(tag);
  enc.u64(payload.bytes().size());
  enc.raw(payload.bytes());
}

std::uint32_t crc_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for large snapshots.
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + pos), n);
    pos += n;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

Store::Store() : state_(std::make_shared<State>()) {}

Store::Store(fs::path data_dir) : state_(std::make_shared<State>()), data_dir_(std::move(data_dir)) {
  std::error_code ec;
  fs::create_directories(*data_dir_ / "raw", ec);
  if (ec) throw Error(Errc::StoreUnavailable, "cannot create " + data_dir_->string() + ": " + ec.message());
  if (fs::exists(snapshot_path())) restore(snapshot_path());
}

fs::path Store::raw_log_path() const { return data_dir_ ? *data_dir_ / "raw" / "readings.ndjson" : fs::path{}; }
fs::path Store::snapshot_path() const { return data_dir_ ? *data_dir_ / "store.snap" : fs::path{}; }

std::shared_ptr<const Store::State> Store::load() const {
  std::lock_guard lock(state_mu_);
  return state_;
}

void Store::publish(std::shared_ptr<const State> next, const std::vector<std::string>& raw_lines) {
  if (data_dir_) {
    const fs::path log = raw_log_path();
    std::error_code ec;
    const auto old_size = fs::exists(log) ? fs::file_size(log, ec) : 0;
    if (!raw_lines.empty()) {
      std::ofstream out(log, std::ios::app | std::ios::binary);
      for (const auto& line : raw_lines) out << line << '\n';
      out.flush();
      if (!out) {
        if (fs::exists(log)) fs::resize_file(log, old_size, ec);
        throw Error(Errc::StoreUnavailable, "cannot append to " + log.string());
      }
    }
    const std::string tmp = snapshot_path().string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      Store scratch;
      scratch.state_ = next;
      out << scratch.snapshot_bytes();
      out.flush();
      if (!out) {
        if (!raw_lines.empty()) fs::resize_file(log, old_size, ec);
        throw Error(Errc::StoreUnavailable, "cannot write " + tmp);
      }
    }
    fs::rename(tmp, snapshot_path(), ec);
    if (ec) {
      if (!raw_lines.empty()) fs::resize_file(log, old_size, ec);
      throw Error(Errc::StoreUnavailable, "cannot replace " + snapshot_path().string());
    }
  }
  std::lock_guard lock(state_mu_);
  state_ = std::move(next);
}

void Store::append(const SeriesKey& key, const TimeSeriesBin& bin) {
  std::lock_guard writer(writer_mu_);
  auto next = std::make_shared<State>(*load());
  merge_bin(next->series[key], key, bin);
  publish(std::move(next), {});
}

std::vector<TimeSeriesBin> Store::query_range(const SeriesKey& key, Instant from, Instant to) const {
  check_range(from, to);
  const auto s = load();
  auto it = s->series.find(key);
  if (it == s->series.end()) return {};
  return {lower(it->second, from), lower(it->second, to)};
}

std::vector<TimeSeriesBin> Store::series(const SeriesKey& key) const {
  const auto s = load();
  auto it = s->series.find(key);
  return it == s->series.end() ? std::vector<TimeSeriesBin>{} : it->second;
}

std::optional<TimeSeriesBin> Store::last_bin(const SeriesKey& key) const {
  const auto s = load();
  auto it = s->series.find(key);
  if (it == s->series.end() || it->second.empty()) return std::nullopt;
  return it->second.back();
}

std::optional<TimeSeriesBin> Store::latest_at_or_before(const SeriesKey& key, Instant at) const {
  const auto s = load();
  auto it = s->series.find(key);
  if (it == s->series.end()) return std::nullopt;
  auto pos = std::upper_bound(it->second.begin(), it->second.end(), at,
                              [](Instant v, const TimeSeriesBin& b) { return v < b.bin_start; });
  if (pos == it->second.begin()) return std::nullopt;
  return *std::prev(pos);
}

std::vector<SeriesKey> Store::keys() const {
  const auto s = load();
  std::vector<SeriesKey> out;
  out.reserve(s->series.size());
  for (const auto& [k, _] : s->series) out.push_back(k);
  return out;
}

std::optional<std::pair<Instant, Instant>> Store::time_extent() const {
  const auto s = load();
  std::optional<std::pair<Instant, Instant>> out;
  for (const auto& [_, bins] : s->series) {
    if (bins.empty()) continue;
    if (!out) {
      out.emplace(bins.front().bin_start, bins.back().bin_start);
    } else {
      out->first = std::min(out->first, bins.front().bin_start);
      out->second = std::max(out->second, bins.back().bin_start);
    }
  }
  return out;
}

std::optional<double> Store::zone_view(const ZoneId& zone, Metric metric, Instant from, Instant to,
                                       ViewAggregate agg) const {
  check_range(from, to);
  const auto s = load();
  std::size_t n = 0;
  double sum = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::optional<Instant> last_start;
  double last_value = 0.0;
  for (SourceKind source : kAllSourceKinds) {
    auto it = s->series.find(SeriesKey{zone, metric, source});
    if (it == s->series.end()) continue;
    for (auto b = lower(it->second, from), e = lower(it->second, to); b != e; ++b) {
      ++n;
      sum += b->value;
      lo = std::min(lo, b->value);
      hi = std::max(hi, b->value);
      if (!last_start || b->bin_start >= *last_start) {
        last_start = b->bin_start;
        last_value = b->value;
      }
    }
  }
  if (n == 0) return std::nullopt;
  switch (agg) {
    case ViewAggregate::Mean: return sum / static_cast<double>(n);
    case ViewAggregate::Min: return lo;
    case ViewAggregate::Max: return hi;
    case ViewAggregate::Sum: return sum;
    case ViewAggregate::Last: return last_value;
  }
  return std::nullopt;
}

bool Store::has_reading(const std::string& reading_id) const { return load()->reading_ids.contains(reading_id); }

std::size_t Store::reading_count() const { return load()->reading_ids.size(); }

std::vector<OutlierFlag> Store::outlier_flags() const {
  const auto s = load();
  std::vector<OutlierFlag> out;
  out.reserve(s->flags.size());
  for (const auto& [_, f] : s->flags) out.push_back(f);
  return out;
}

Store::Writer Store::writer() { return Writer(*this, std::unique_lock(writer_mu_)); }

Store::Writer::Writer(Store& store, std::unique_lock<std::mutex> lock)
    : store_(&store), lock_(std::move(lock)), base_(store.load()) {}

bool Store::Writer::has_reading(const std::string& reading_id) const { return base_->reading_ids.contains(reading_id); }

std::optional<Instant> Store::Writer::last_bin_start(const SeriesKey& key) const {
  auto it = base_->series.find(key);
  if (it == base_->series.end() || it->second.empty()) return std::nullopt;
  return it->second.back().bin_start;
}

void Store::Writer::commit(const StoreCommit& commit) {
  auto next = std::make_shared<State>(*base_);
  for (const auto& id : commit.reading_ids) {
    if (!next->reading_ids.insert(id).second) {
      throw Error(Errc::InvalidArgument, "reading " + id + " already stored");
    }
  }
  for (const auto& [key, bins] : commit.bins) {
    auto& series = next->series[key];
    for (const auto& bin : bins) merge_bin(series, key, bin);
  }
  for (const auto& f : commit.flags) next->flags[f.reading_id] = f;
  store_->publish(next, commit.raw_lines);
  base_ = std::move(next);
}

void Store::register_asset(const HeritageAsset& asset, const ZoneSet& zones) {
  std::lock_guard writer(writer_mu_);
  const auto base = load();
  if (base->assets.contains(asset.asset_id)) {
    throw Error(Errc::DuplicateAsset, "asset " + asset.asset_id + " already registered");
  }
  const auto located = zones.locate(asset.location);
  if (!located || *located != asset.zone) {
    throw Error(Errc::ZoneMismatch, "asset " + asset.asset_id + " declares zone '" + asset.zone + "' but lies in '" +
                                        located.value_or("<none>") + "'");
  }
  auto next = std::make_shared<State>(*base);
  next->assets.emplace(asset.asset_id, asset);
  publish(std::move(next), {});
}

std::vector<HeritageAsset> Store::list_assets(const std::optional<ZoneId>& zone) const {
  const auto s = load();
  std::vector<HeritageAsset> out;
  for (const auto& [_, a] : s->assets) {
    if (!zone || a.zone == *zone) out.push_back(a);
  }
  return out;
}

void Store::put_record(const std::string& ns, const std::string& key, nlohmann::json value) {
  std::lock_guard writer(writer_mu_);
  auto next = std::make_shared<State>(*load());
  next->records[{ns, key}] = std::move(value);
  publish(std::move(next), {});
}

std::optional<nlohmann::json> Store::get_record(const std::string& ns, const std::string& key) const {
  const auto s = load();
  auto it = s->records.find({ns, key});
  if (it == s->records.end()) return std::nullopt;
  return it->second;
}

std::vector<AppRecord> Store::list_records(const std::string& ns) const {
  const auto s = load();
  std::vector<AppRecord> out;
  for (const auto& [k, v] : s->records) {
    if (k.first == ns) out.push_back({k.first, k.second, v});
  }
  return out;
}

std::string Store::snapshot_bytes() const {
  const auto s = load();
  Encoder enc;
  enc.raw(kMagic);
  enc.u32(kVersion);

  for (const auto& [key, bins] : s->series) {
    Encoder p;
    p.str(key.zone);
    p.u8(static_cast<std::uint8_t>(key.metric));
    p.u8(static_cast<std::uint8_t>(key.source));
    p.u64(bins.size());
    for (const auto& b : bins) {
      p.i64(to_unix(b.bin_start));
      p.f64(b.value);
      p.u32(b.sample_count);
    }
    section(enc, kSeries, p);
  }
  {
    Encoder p;
    p.u64(s->reading_ids.size());
    for (const auto& id : s->reading_ids) p.str(id);
    section(enc, kReadingIds, p);
  }
  {
    Encoder p;
    p.u64(s->flags.size());
    for (const auto& [_, f] : s->flags) {
      p.str(f.reading_id);
      p.f64(f.modified_z);
      p.u8(static_cast<std::uint8_t>(f.rule));
    }
    section(enc, kOutliers, p);
  }
  {
    Encoder p;
    p.u64(s->assets.size());
    for (const auto& [_, a] : s->assets) {
      p.str(a.asset_id);
      p.str(a.name);
      p.str(a.zone);
      p.u8(static_cast<std::uint8_t>(a.category));
      p.str(a.condition_note);
      p.f64(a.location.lon);
      p.f64(a.location.lat);
    }
    section(enc, kAssets, p);
  }
  {
    Encoder p;
    p.u64(s->records.size());
    for (const auto& [k, v] : s->records) {
      p.str(k.first);
      p.str(k.second);
      p.str(v.dump());
    }
    section(enc, kRecords, p);
  }
  enc.u32(crc_of(enc.bytes()));
  return std::move(enc.bytes());
}

void Store::snapshot(const fs::path& path) const {
  const std::string bytes = snapshot_bytes();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::Io, "cannot write snapshot " + path.string());
}

void Store::restore(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open snapshot " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  restore_bytes(bytes);
}

void Store::restore_bytes(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + 8) throw Error(Errc::CorruptSnapshot, "snapshot too short");
  const auto body = bytes.substr(0, bytes.size() - 4);
  Decoder tail(bytes.substr(bytes.size() - 4));
  if (tail.u32() != crc_of(body)) throw Error(Errc::CorruptSnapshot, "checksum mismatch");

  auto next = std::make_shared<State>();
  Decoder dec(body);
  if (dec.take(kMagic.size()) != kMagic) throw Error(Errc::CorruptSnapshot, "bad magic");
  if (dec.u32() != kVersion) throw Error(Errc::CorruptSnapshot, "unsupported snapshot version");

  auto metric_of = [](std::uint8_t v) {
    if (v >= kAllMetrics.size()) throw Error(Errc::CorruptSnapshot, "bad metric tag");
    return static_cast<Metric>(v);
  };
  auto source_of = [](std::uint8_t v) {
    if (v >= kAllSourceKinds.size()) throw Error(Errc::CorruptSnapshot, "bad source tag");
    return static_cast<SourceKind>(v);
  };

  while (!dec.done()) {
    const auto tag = dec.u8();
    const auto len = dec.u64();
    Decoder p(dec.take(len));
    switch (tag) {
      case kSeries: {
        SeriesKey key;
        key.zone = p.str();
        key.metric = metric_of(p.u8());
        key.source = source_of(p.u8());
        auto& bins = next->series[key];
        const auto n = p.u64();
        for (std::uint64_t i = 0; i < n; ++i) {
          TimeSeriesBin b;
          b.bin_start = from_unix(p.i64());
          b.value = p.f64();
          b.sample_count = p.u32();
          bins.push_back(b);
        }
        break;
      }
      case kReadingIds: {
        const auto n = p.u64();
        for (std::uint64_t i = 0; i < n; ++i) next->reading_ids.insert(p.str());
        break;
      }
      case kOutliers: {
        const auto n = p.u64();
        for (std::uint64_t i = 0; i < n; ++i) {
          OutlierFlag f;
          f.reading_id = p.str();
          f.modified_z = p.f64();
          f.rule = p.u8() == 0 ? OutlierRule::Mad : OutlierRule::RangeFallback;
          next->flags.emplace(f.reading_id, f);
        }
        break;
      }
      case kAssets: {
        const auto n = p.u64();
        for (std::uint64_t i = 0; i < n; ++i) {
          HeritageAsset a;
          a.asset_id = p.str();
          a.name = p.str();
          a.zone = p.str();
          const auto cat = p.u8();
          if (cat > static_cast<std::uint8_t>(AssetCategory::Other)) throw Error(Errc::CorruptSnapshot, "bad category");
          a.category = static_cast<AssetCategory>(cat);
          a.condition_note = p.str();
          a.location.lon = p.f64();
          a.location.lat = p.f64();
          next->assets.emplace(a.asset_id, a);
        }
        break;
      }
      case kRecords: {
        const auto n = p.u64();
        for (std::uint64_t i = 0; i < n; ++i) {
          std::string ns = p.str();
          std::string key = p.str();
          const std::string doc = p.str();
          try {
            next->records[{ns, key}] = nlohmann::json::parse(doc);
          } catch (const nlohmann::json::exception&) {
            throw Error(Errc::CorruptSnapshot, "bad application record");
          }
        }
        break;
      }
      default:
        throw Error(Errc::CorruptSnapshot, "unknown section tag " + std::to_string(tag));
    }
    if (!p.done()) throw Error(Errc::CorruptSnapshot, "section length mismatch");
  }

  std::lock_guard writer(writer_mu_);
  std::lock_guard lock(state_mu_);
  state_ = std::move(next);
}

}  // namespace htwin
