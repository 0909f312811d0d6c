#include "regflood/calendar.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

namespace regflood {
namespace {

using namespace std::chrono;

constexpr std::int64_t kSecPerDay = 86400;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

bool read_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > text.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (text[i] < '0' || text[i] > '9') return false;
  }
  const auto* first = text.data() + pos;
  return std::from_chars(first, first + len, out).ec == std::errc{};
}

}  // namespace

int year_of(Timestamp t) {
  const sys_days day{days{floor_div(t, kSecPerDay)}};
  return static_cast<int>(year_month_day{day}.year());
}

Timestamp start_of_year(int y) {
  const sys_days day{year{y} / January / 1};
  return static_cast<Timestamp>(day.time_since_epoch().count()) * kSecPerDay;
}

std::optional<Timestamp> parse_iso8601(std::string_view text) {
  if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);
  int y = 0, mo = 0, d = 0, hh = 0, mm = 0, ss = 0;
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  if (!read_int(text, 0, 4, y) || !read_int(text, 5, 2, mo) ||
      !read_int(text, 8, 2, d)) {
    return std::nullopt;
  }
  if (text.size() > 10) {
    if ((text[10] != 'T' && text[10] != ' ') || text.size() < 16 || text[13] != ':') {
      return std::nullopt;
    }
    if (!read_int(text, 11, 2, hh) || !read_int(text, 14, 2, mm)) return std::nullopt;
    if (text.size() > 16) {
      if (text.size() != 19 || text[16] != ':' || !read_int(text, 17, 2, ss)) {
        return std::nullopt;
      }
    }
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 59) return std::nullopt;
  const auto days_since = sys_days{ymd}.time_since_epoch().count();
  return static_cast<Timestamp>(days_since) * kSecPerDay + hh * 3600 + mm * 60 + ss;
}

std::string format_iso8601(Timestamp t) {
  const std::int64_t day_index = floor_div(t, kSecPerDay);
  const std::int64_t secs = t - day_index * kSecPerDay;
  const year_month_day ymd{sys_days{days{day_index}}};
  char buf[32];
  if (secs == 0) {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  } else {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), static_cast<int>(secs / 3600),
                  static_cast<int>((secs / 60) % 60), static_cast<int>(secs % 60));
  }
  return buf;
}

}  // namespace regflood
