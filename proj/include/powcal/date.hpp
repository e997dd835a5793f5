#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace powcal {

/// Calendar day, stored as days since 1970-01-01 (proleptic Gregorian).
struct Date {
  std::int32_t days = 0;

  friend constexpr bool operator==(Date a, Date b) { return a.days == b.days; }
  friend constexpr bool operator!=(Date a, Date b) { return a.days != b.days; }
  friend constexpr bool operator<(Date a, Date b) { return a.days < b.days; }
  friend constexpr bool operator<=(Date a, Date b) { return a.days <= b.days; }
  friend constexpr bool operator>(Date a, Date b) { return a.days > b.days; }
  friend constexpr bool operator>=(Date a, Date b) { return a.days >= b.days; }
};

struct Ymd {
  int year = 1970;
  int month = 1;
  int day = 1;
};

bool is_leap_year(int year);

/// Throws std::invalid_argument on an impossible calendar date.
Date make_date(int year, int month, int day);

Ymd to_ymd(Date d);

constexpr Date add_days(Date d, int n) { return Date{d.days + n}; }

/// Strict ISO-8601 "YYYY-MM-DD". Throws std::invalid_argument otherwise.
Date parse_date(std::string_view iso);

std::string format_date(Date d);

/// Day-of-year on a 365-day reference scale: Feb 28 is always 59, Mar 1 is
/// always 60, and Feb 29 maps to 59.5 so windows centred on it pick up
/// Feb 28 and Mar 1 in non-leap years.
double canonical_doy(Date d);

/// Circular distance between two canonical day-of-year values (period 365).
double doy_distance(double a, double b);

}  // namespace powcal
