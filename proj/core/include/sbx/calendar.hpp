#pragma once

#include <string>
#include <vector>

namespace sbx {

/// Calendar day stored as a count of days since 1970-01-01 (proleptic
/// Gregorian). Cheap value type; arithmetic is plain day arithmetic.
struct Date {
  int days_since_epoch = 0;

  friend auto operator<=>(const Date&, const Date&) = default;
  Date operator+(int d) const { return Date{days_since_epoch + d}; }
  int operator-(const Date& o) const { return days_since_epoch - o.days_since_epoch; }
};

/// Parses strict ISO-8601 "YYYY-MM-DD"; throws Error(InvalidArgument) otherwise.
Date parse_date(const std::string& text);

std::string format_date(Date d);

/// Day of week with Monday = 0 .. Sunday = 6.
int day_of_week(Date d);

/// [start, start+1, ..., start+n-1]
std::vector<Date> date_range(Date start, int n);

}  // namespace sbx
