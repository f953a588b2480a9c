#include "sbx/calendar.hpp"

#include <cctype>
#include <cstdio>

#include "sbx/errors.hpp"

namespace sbx {

namespace {

// Howard Hinnant's civil-day algorithms, valid over the proleptic Gregorian
// calendar.
int days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);             // [0, 399]
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;  // [0, 365]
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;            // [0, 146096]
  return era * 146097 + static_cast<int>(doe) - 719468;
}

void civil_from_days(int z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const int era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<int>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y += m <= 2;
}

bool is_leap(int y) { return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0); }

}  // namespace

Date parse_date(const std::string& text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-')
    throw Error(ErrorCode::InvalidArgument, "expected YYYY-MM-DD, got '" + text + "'");
  for (int i : {0, 1, 2, 3, 5, 6, 8, 9})
    if (!std::isdigit(static_cast<unsigned char>(text[i])))
      throw Error(ErrorCode::InvalidArgument, "expected YYYY-MM-DD, got '" + text + "'");
  const int y = std::stoi(text.substr(0, 4));
  const int m = std::stoi(text.substr(5, 2));
  const int d = std::stoi(text.substr(8, 2));
  static const int mdays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m < 1 || m > 12)
    throw Error(ErrorCode::InvalidArgument, "month out of range in '" + text + "'");
  const int dmax = (m == 2 && is_leap(y)) ? 29 : mdays[m - 1];
  if (d < 1 || d > dmax)
    throw Error(ErrorCode::InvalidArgument, "day out of range in '" + text + "'");
  return Date{days_from_civil(y, m, d)};
}

std::string format_date(Date date) {
  int y;
  unsigned m, d;
  civil_from_days(date.days_since_epoch, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", y, m, d);
  return buf;
}

int day_of_week(Date d) {
  // 1970-01-01 was a Thursday (3 with Monday = 0).
  int w = (d.days_since_epoch + 3) % 7;
  return w < 0 ? w + 7 : w;
}

std::vector<Date> date_range(Date start, int n) {
  std::vector<Date> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(start + i);
  return out;
}

}  // namespace sbx
