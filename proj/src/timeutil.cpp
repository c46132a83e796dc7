#include "radrec/timeutil.hpp"

#include <chrono>
#include <cstdio>

namespace radrec::timeutil {

namespace chr = std::chrono;

static chr::year_month_day to_ymd(const Date& d) {
  return chr::year_month_day{chr::year{d.year}, chr::month{d.month}, chr::day{d.day}};
}

static Date from_ymd(const chr::year_month_day& ymd) {
  return Date{int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day())};
}

std::optional<EpochSeconds> parse_timestamp(const std::string& s) {
  int y, mo, d, h, mi, se;
  char tail;
  if (s.size() != 20) return std::nullopt;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &y, &mo, &d, &h, &mi, &se, &tail) != 7)
    return std::nullopt;
  if (tail != 'Z') return std::nullopt;
  if (mo < 1 || mo > 12 || d < 1 || h < 0 || h > 23 || mi < 0 || mi > 59 || se < 0 || se > 59)
    return std::nullopt;
  if (unsigned(d) > days_in_month(y, unsigned(mo))) return std::nullopt;
  return to_epoch(Date{y, unsigned(mo), unsigned(d)}, h, mi, se);
}

std::optional<Date> parse_date(const std::string& s) {
  int y, mo, d;
  if (s.size() != 10) return std::nullopt;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d", &y, &mo, &d) != 3) return std::nullopt;
  if (mo < 1 || mo > 12 || d < 1 || unsigned(d) > days_in_month(y, unsigned(mo)))
    return std::nullopt;
  return Date{y, unsigned(mo), unsigned(d)};
}

std::string format_timestamp(EpochSeconds t) {
  Date d = to_date(t);
  int64_t dayno = days_between(Date{1970, 1, 1}, d);
  int64_t rem = t - dayno * 86400;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", d.year, d.month, d.day,
                int(rem / 3600), int((rem % 3600) / 60), int(rem % 60));
  return buf;
}

std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", d.year, d.month, d.day);
  return buf;
}

EpochSeconds to_epoch(const Date& d, int hour, int minute, int second) {
  auto days = chr::sys_days{to_ymd(d)};
  return chr::duration_cast<chr::seconds>(days.time_since_epoch()).count() + hour * 3600 +
         minute * 60 + second;
}

Date to_date(EpochSeconds t) {
  // Floor division so pre-1970 timestamps land on the right day.
  int64_t dayno = t >= 0 ? t / 86400 : (t - 86399) / 86400;
  auto ymd = chr::year_month_day{chr::sys_days{chr::days{dayno}}};
  return from_ymd(ymd);
}

int64_t days_between(const Date& a, const Date& b) {
  auto da = chr::sys_days{to_ymd(a)};
  auto db = chr::sys_days{to_ymd(b)};
  return (db - da).count();
}

Date add_days(const Date& d, int64_t days) {
  auto ymd = chr::year_month_day{chr::sys_days{to_ymd(d)} + chr::days{days}};
  return from_ymd(ymd);
}

unsigned days_in_month(int year, unsigned month) {
  auto last = chr::year_month_day_last{chr::year{year}, chr::month_day_last{chr::month{month}}};
  return unsigned(last.day());
}

Date add_months_clamped(const Date& d, int months) {
  auto ymd = to_ymd(d) + chr::months{months};
  if (!ymd.ok()) {
    ymd = chr::year_month_day{ymd.year() / ymd.month() / chr::last};
  }
  return from_ymd(ymd);
}

Date add_years_clamped(const Date& d, int years) {
  auto ymd = to_ymd(d) + chr::years{years};
  if (!ymd.ok()) {
    ymd = chr::year_month_day{ymd.year() / ymd.month() / chr::last};
  }
  return from_ymd(ymd);
}

}  // namespace radrec::timeutil
