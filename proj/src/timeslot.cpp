#include "controlgen/timeslot.hpp"

#include <cstdio>

namespace controlgen {

std::string day_type_name(DayType d) {
  switch (d) {
    case DayType::WD: return "WD";
    case DayType::SA: return "SA";
    case DayType::SU: return "SU";
  }
  return "WD";
}

std::optional<DayType> parse_day_type(const std::string& s) {
  if (s == "WD") return DayType::WD;
  if (s == "SA") return DayType::SA;
  if (s == "SU") return DayType::SU;
  return std::nullopt;
}

// Howard Hinnant's civil date algorithms.
int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

void civil_from_days(int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int64_t yy = static_cast<int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

int weekday_of_day(int64_t days_since_epoch) {
  // 1970-01-01 was a Thursday (index 3 with Monday = 0).
  return static_cast<int>(((days_since_epoch % 7) + 7 + 3) % 7);
}

DayType day_type_of_day(int64_t days_since_epoch) {
  const int wd = weekday_of_day(days_since_epoch);
  if (wd < 5) return DayType::WD;
  return wd == 5 ? DayType::SA : DayType::SU;
}

std::optional<int64_t> parse_iso8601(const std::string& s) {
  int y, mo, d, h, mi, sec;
  char tail;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &y, &mo, &d, &h, &mi,
                  &sec, &tail) != 7 ||
      tail != 'Z') {
    return std::nullopt;
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 ||
      mi > 59 || sec < 0 || sec > 60) {
    return std::nullopt;
  }
  return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + sec;
}

std::string format_iso8601(int64_t t) {
  int64_t days = t / 86400;
  int64_t rem = t % 86400;
  if (rem < 0) {
    rem += 86400;
    days -= 1;
  }
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", y, m, d,
                static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                static_cast<int>(rem % 60));
  return buf;
}

}  // namespace controlgen
