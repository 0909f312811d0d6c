#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace regflood {

/// Seconds since 1970-01-01T00:00:00 UTC.
using Timestamp = std::int64_t;

inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr double kDaysPerYear = 365.25;

/// Civil (proleptic Gregorian) year of a timestamp.
int year_of(Timestamp t);

/// Timestamp of January 1st, 00:00 of `year`.
Timestamp start_of_year(int year);

/// Parses `YYYY-MM-DD`, `YYYY-MM-DDTHH:MM` or `YYYY-MM-DDTHH:MM:SS` (a space
/// may replace the `T`, a trailing `Z` is accepted). Returns nullopt on
/// malformed text or impossible dates.
std::optional<Timestamp> parse_iso8601(std::string_view text);

/// `YYYY-MM-DD` when the time of day is midnight, otherwise
/// `YYYY-MM-DDTHH:MM:SS`.
std::string format_iso8601(Timestamp t);

}  // namespace regflood
