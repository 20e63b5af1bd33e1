#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace controlgen {

enum class DayType : int { WD = 0, SA = 1, SU = 2 };

inline constexpr int kHoursPerDay = 24;
inline constexpr int kSlotCount = 3 * kHoursPerDay;  // {WD,SA,SU} x 24

// One of the 72 (day type, hour) control slots.
struct TimeSlot {
  DayType day = DayType::WD;
  int hour = 0;

  friend bool operator==(const TimeSlot&, const TimeSlot&) = default;
};

inline int slot_index(TimeSlot s) {
  return static_cast<int>(s.day) * kHoursPerDay + s.hour;
}

inline TimeSlot slot_from_index(int idx) {
  return TimeSlot{static_cast<DayType>(idx / kHoursPerDay), idx % kHoursPerDay};
}

std::string day_type_name(DayType d);
std::optional<DayType> parse_day_type(const std::string& s);

// --- Civil time (UTC only) ----------------------------------------------

// Days since 1970-01-01 for a proleptic Gregorian date.
int64_t days_from_civil(int y, int m, int d);
void civil_from_days(int64_t days, int& y, int& m, int& d);

// 0 = Monday ... 6 = Sunday
int weekday_of_day(int64_t days_since_epoch);
DayType day_type_of_day(int64_t days_since_epoch);

// "YYYY-MM-DDTHH:MM:SSZ" <-> seconds since epoch.
std::optional<int64_t> parse_iso8601(const std::string& s);
std::string format_iso8601(int64_t seconds_since_epoch);

}  // namespace controlgen
