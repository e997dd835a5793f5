#include "powcal/date.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace powcal {

bool is_leap_year(int year) {
  return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

namespace {

constexpr std::array<int, 12> kMonthLen = {31, 28, 31, 30, 31, 30,
                                           31, 31, 30, 31, 30, 31};

int month_length(int year, int month) {
  if (month == 2 && is_leap_year(year)) return 29;
  return kMonthLen[static_cast<std::size_t>(month - 1)];
}

// Howard Hinnant's civil calendar algorithms.
std::int32_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy =
      static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int>(doe) - 719468;
}

Ymd civil_from_days(std::int32_t z) {
  z += 719468;
  const int era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int y = static_cast<int>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return Ymd{y + (m <= 2), static_cast<int>(m), static_cast<int>(d)};
}

}  // namespace

Date make_date(int year, int month, int day) {
  if (month < 1 || month > 12)
    throw std::invalid_argument("make_date: month out of range");
  if (day < 1 || day > month_length(year, month))
    throw std::invalid_argument("make_date: day out of range");
  return Date{days_from_civil(year, month, day)};
}

Ymd to_ymd(Date d) { return civil_from_days(d.days); }

Date parse_date(std::string_view iso) {
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-')
    throw std::invalid_argument("parse_date: expected YYYY-MM-DD, got '" +
                                std::string(iso) + "'");
  auto digits = [&](std::size_t pos, std::size_t len) {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (iso[i] < '0' || iso[i] > '9')
        throw std::invalid_argument("parse_date: expected YYYY-MM-DD, got '" +
                                    std::string(iso) + "'");
      v = v * 10 + (iso[i] - '0');
    }
    return v;
  };
  const int y = digits(0, 4);
  const int m = digits(5, 2);
  const int d = digits(8, 2);
  try {
    return make_date(y, m, d);
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("parse_date: impossible date '" +
                                std::string(iso) + "'");
  }
}

std::string format_date(Date d) {
  const Ymd ymd = to_ymd(d);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", ymd.year, ymd.month,
                ymd.day);
  return buf;
}

double canonical_doy(Date d) {
  const Ymd ymd = to_ymd(d);
  int doy = ymd.day;
  for (int m = 1; m < ymd.month; ++m) doy += month_length(ymd.year, m);
  if (!is_leap_year(ymd.year)) return doy;
  if (doy < 60) return doy;    // Jan 1 .. Feb 28 unchanged
  if (doy == 60) return 59.5;  // Feb 29
  return doy - 1;              // Mar 1 (61st day) -> 60, etc.
}

double doy_distance(double a, double b) {
  double diff = std::fabs(a - b);
  return std::min(diff, 365.0 - diff);
}

}  // namespace powcal
