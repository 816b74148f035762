#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace fluxwarn {

/// A UTC instant at one-second resolution. Timestamps in flux data are read as
/// local clock time of the monitored city; no zone conversion is applied.
using Instant = std::chrono::sys_seconds;
using Seconds = std::chrono::seconds;

inline constexpr Seconds kBinStep{600};
inline constexpr Seconds kHourStep{3600};

/// Parses `YYYY-MM-DDTHH:MM[:SS](Z|+00:00)`. Returns nullopt on any deviation.
std::optional<Instant> parse_instant(std::string_view text);

/// Formats as `YYYY-MM-DDTHH:MMZ`, appending `:SS` only when seconds are nonzero.
std::string format_instant(Instant t);

/// Formats the calendar date as `YYYY-MM-DD`.
std::string format_date(Instant t);

int hour_of_day(Instant t);
/// 0 = Monday ... 6 = Sunday.
int weekday_index(Instant t);
Instant start_of_day(Instant t);
Instant start_of_year(Instant t);

inline bool is_bin_aligned(Instant t) {
  return t.time_since_epoch().count() % kBinStep.count() == 0;
}
inline bool is_hour_aligned(Instant t) {
  return t.time_since_epoch().count() % kHourStep.count() == 0;
}

}  // namespace fluxwarn
