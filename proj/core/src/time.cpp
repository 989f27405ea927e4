#include "htwin/time.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

#include "htwin/error.hpp"

namespace htwin {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::DegenerateRing: return "DegenerateRing";
    case Errc::SelfIntersectingRing: return "SelfIntersectingRing";
    case Errc::DuplicateZone: return "DuplicateZone";
    case Errc::UnknownZone: return "UnknownZone";
    case Errc::UnknownNode: return "UnknownNode";
    case Errc::InvalidGeometry: return "InvalidGeometry";
    case Errc::MalformedJson: return "MalformedJson";
    case Errc::MissingField: return "MissingField";
    case Errc::UnknownSensor: return "UnknownSensor";
    case Errc::UnknownMetric: return "UnknownMetric";
    case Errc::BadTimestamp: return "BadTimestamp";
    case Errc::BadBinWidth: return "BadBinWidth";
    case Errc::BinWidthMismatch: return "BinWidthMismatch";
    case Errc::OutOfOrder: return "OutOfOrder";
    case Errc::BadRange: return "BadRange";
    case Errc::Io: return "Io";
    case Errc::CorruptSnapshot: return "CorruptSnapshot";
    case Errc::DuplicateAsset: return "DuplicateAsset";
    case Errc::ZoneMismatch: return "ZoneMismatch";
    case Errc::NoEstimates: return "NoEstimates";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::NoReferenceConfigured: return "NoReferenceConfigured";
    case Errc::NoOverlap: return "NoOverlap";
    case Errc::InvalidScenario: return "InvalidScenario";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::StoreUnavailable: return "StoreUnavailable";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Config: return "Config";
  }
  return "Unknown";
}

namespace {

[[noreturn]] void bad(std::string_view text) {
  throw Error(Errc::BadTimestamp, "cannot parse instant '" + std::string(text) + "'");
}

int digits(std::string_view text, std::size_t pos, std::size_t count, std::string_view whole) {
  if (pos + count > text.size()) bad(whole);
  int value = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) bad(whole);
    value = value * 10 + (text[i] - '0');
  }
  return value;
}

}  // namespace

Instant parse_rfc3339(std::string_view text) {
  using namespace std::chrono;
  // YYYY-MM-DDTHH:MM:SS[.frac](Z|±HH:MM)
  if (text.size() < 20) bad(text);
  const int year = digits(text, 0, 4, text);
  if (text[4] != '-' || text[7] != '-') bad(text);
  const int month = digits(text, 5, 2, text);
  const int day = digits(text, 8, 2, text);
  if (text[10] != 'T' && text[10] != 't' && text[10] != ' ') bad(text);
  const int hour = digits(text, 11, 2, text);
  if (text[13] != ':' || text[16] != ':') bad(text);
  const int minute = digits(text, 14, 2, text);
  const int second = digits(text, 17, 2, text);

  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    const std::size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == start) bad(text);
  }
  if (pos >= text.size()) bad(text);

  int offset_seconds = 0;
  const char zone = text[pos];
  if (zone == 'Z' || zone == 'z') {
    ++pos;
  } else if (zone == '+' || zone == '-') {
    const int oh = digits(text, pos + 1, 2, text);
    if (pos + 3 >= text.size() || text[pos + 3] != ':') bad(text);
    const int om = digits(text, pos + 4, 2, text);
    if (oh > 23 || om > 59) bad(text);
    offset_seconds = (oh * 3600 + om * 60) * (zone == '+' ? 1 : -1);
    pos += 6;
  } else {
    bad(text);
  }
  if (pos != text.size()) bad(text);

  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 60) bad(text);

  const auto midnight = sys_days{ymd};
  return Instant{midnight.time_since_epoch()} + hours{hour} + minutes{minute} + Seconds{second} -
         Seconds{offset_seconds};
}

std::string format_rfc3339(Instant t) {
  using namespace std::chrono;
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const auto since_midnight = t - day_point;
  const auto h = duration_cast<hours>(since_midnight);
  const auto m = duration_cast<minutes>(since_midnight - h);
  const auto s = since_midnight - h - m;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(h.count()), static_cast<int>(m.count()),
                static_cast<int>(s.count()));
  return buf;
}

Instant parse_instant(std::string_view text) {
  std::int64_t value = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty()) {
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec == std::errc{} && ptr == last) {
      if (value <= to_unix(kBeginningOfTime) || value >= to_unix(kEndOfTime)) {
        throw Error(Errc::BadTimestamp, "unix time out of range: " + std::string(text));
      }
      return from_unix(value);
    }
  }
  return parse_rfc3339(text);
}

}  // namespace htwin
