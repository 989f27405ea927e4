#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace htwin {

enum class Errc {
  DegenerateRing,
  SelfIntersectingRing,
  DuplicateZone,
  UnknownZone,
  UnknownNode,
  InvalidGeometry,
  MalformedJson,
  MissingField,
  UnknownSensor,
  UnknownMetric,
  BadTimestamp,
  BadBinWidth,
  BinWidthMismatch,
  OutOfOrder,
  BadRange,
  Io,
  CorruptSnapshot,
  DuplicateAsset,
  ZoneMismatch,
  NoEstimates,
  EmptyInput,
  NoReferenceConfigured,
  NoOverlap,
  InvalidScenario,
  ShapeMismatch,
  StoreUnavailable,
  InvalidArgument,
  Config,
};

std::string_view errc_name(Errc code) noexcept;

// Every recoverable failure in the hub is reported as an Error carrying one
// of the codes above; callers branch on code(), humans read what().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace htwin
