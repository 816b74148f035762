#include "fluxwarn/time.hpp"

#include <charconv>
#include <cstdio>

namespace fluxwarn {
namespace {

bool read_int(std::string_view text, std::size_t pos, std::size_t width, int& out) {
  if (pos + width > text.size()) return false;
  for (std::size_t i = pos; i < pos + width; ++i) {
    if (text[i] < '0' || text[i] > '9') return false;
  }
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + width, out);
  return ec == std::errc{} && ptr == text.data() + pos + width;
}

bool expect(std::string_view text, std::size_t pos, char c) {
  return pos < text.size() && text[pos] == c;
}

}  // namespace

std::optional<Instant> parse_instant(std::string_view text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (!read_int(text, 0, 4, y) || !expect(text, 4, '-') || !read_int(text, 5, 2, mo) ||
      !expect(text, 7, '-') || !read_int(text, 8, 2, d) || !expect(text, 10, 'T') ||
      !read_int(text, 11, 2, h) || !expect(text, 13, ':') || !read_int(text, 14, 2, mi)) {
    return std::nullopt;
  }
  std::size_t pos = 16;
  if (expect(text, pos, ':')) {
    if (!read_int(text, pos + 1, 2, s)) return std::nullopt;
    pos += 3;
  }
  std::string_view zone = text.substr(pos);
  if (zone != "Z" && zone != "+00:00") return std::nullopt;

  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) return std::nullopt;
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

std::string format_instant(Instant t) {
  using namespace std::chrono;
  const auto day_start = floor<days>(t);
  const year_month_day ymd{day_start};
  const hh_mm_ss<seconds> tod{t - day_start};
  char buf[64];
  if (tod.seconds().count() == 0) {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long>(tod.hours().count()), static_cast<long>(tod.minutes().count()));
  } else {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), static_cast<long>(tod.hours().count()),
                  static_cast<long>(tod.minutes().count()),
                  static_cast<long>(tod.seconds().count()));
  }
  return buf;
}

std::string format_date(Instant t) {
  using namespace std::chrono;
  const year_month_day ymd{floor<days>(t)};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

int hour_of_day(Instant t) {
  using namespace std::chrono;
  return static_cast<int>(duration_cast<hours>(t - floor<days>(t)).count());
}

int weekday_index(Instant t) {
  using namespace std::chrono;
  return static_cast<int>(weekday{floor<days>(t)}.iso_encoding()) - 1;
}

Instant start_of_day(Instant t) {
  return std::chrono::floor<std::chrono::days>(t);
}

Instant start_of_year(Instant t) {
  using namespace std::chrono;
  const year_month_day ymd{floor<days>(t)};
  return sys_days{ymd.year() / January / 1};
}

}  // namespace fluxwarn
