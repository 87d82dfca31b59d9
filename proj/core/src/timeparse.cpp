#include "lpcorp/timeparse.hpp"

#include <cstdio>

#include "lpcorp/errors.hpp"

namespace lpcorp::timeparse {

namespace {

// Days since 1970-01-01 for a proleptic Gregorian civil date
// (Howard Hinnant's days_from_civil).
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2u) / 5u + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int* y, unsigned* m, unsigned* d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  *d = doy - (153 * mp + 2) / 5 + 1;
  *m = mp + (mp < 10 ? 3 : -9);
  *y = static_cast<int>(yy + (*m <= 2));
}

}  // namespace

std::int64_t parse_iso8601(std::string_view sv) {
  const std::string s(sv);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0;
  double sec = 0.0;
  char sep = 0;
  const int n =
      std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%lf", &y, &mo, &d, &sep, &h,
                  &mi, &sec);
  if (n < 3 || mo < 1 || mo > 12 || d < 1 || d > 31) {
    throw DataError("unparseable timestamp: \"" + s + "\"");
  }
  if (n >= 4 && sep != 'T' && sep != 't' && sep != ' ') {
    throw DataError("unparseable timestamp: \"" + s + "\"");
  }
  if (n > 3 && n < 7) {
    throw DataError("unparseable timestamp: \"" + s + "\"");
  }
  if (h > 23 || mi > 59 || sec >= 61.0 || h < 0 || mi < 0 || sec < 0.0) {
    throw DataError("timestamp fields out of range: \"" + s + "\"");
  }
  const auto tail = sv.find_last_not_of(' ');
  if (tail != std::string_view::npos && (sv[tail] == 'Z' || sv[tail] == 'z')) {
    // UTC designator, nothing to adjust.
  }
  return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 +
         static_cast<std::int64_t>(sec);
}

std::string format_iso8601(std::int64_t t) {
  std::int64_t days = t / 86400;
  std::int64_t rem = t % 86400;
  if (rem < 0) {
    rem += 86400;
    days -= 1;
  }
  int y;
  unsigned mo, d;
  civil_from_days(days, &y, &mo, &d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", y,
                mo, d, static_cast<long long>(rem / 3600),
                static_cast<long long>((rem / 60) % 60),
                static_cast<long long>(rem % 60));
  return buf;
}

}  // namespace lpcorp::timeparse
