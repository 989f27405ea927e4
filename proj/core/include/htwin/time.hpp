#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace htwin {

using Instant = std::chrono::sys_seconds;
using Seconds = std::chrono::seconds;

inline Instant from_unix(std::int64_t s) { return Instant{Seconds{s}}; }
inline std::int64_t to_unix(Instant t) { return t.time_since_epoch().count(); }

/// Open-ended range bounds that survive ordinary arithmetic.
inline const Instant kBeginningOfTime = from_unix(-(std::int64_t{1} << 52));
inline const Instant kEndOfTime = from_unix(std::int64_t{1} << 52);

// RFC 3339 with 'Z' or a numeric offset; fractional seconds are truncated.
// Throws Error(BadTimestamp).
Instant parse_rfc3339(std::string_view text);

// Always UTC, second precision: "2025-03-01T12:00:00Z".
std::string format_rfc3339(Instant t);

// Accepts RFC 3339 or a plain integer of unix seconds.
Instant parse_instant(std::string_view text);

}  // namespace htwin
