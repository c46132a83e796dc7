#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace radrec::timeutil {

// Calendar date, UTC. Day-level granularity is what the adherence analyses
// operate on; full timestamps are kept only for timeline ordering.
struct Date {
  int year = 1970;
  unsigned month = 1;  // 1..12
  unsigned day = 1;    // 1..31

  auto operator<=>(const Date&) const = default;
};

// Seconds since the Unix epoch, UTC.
using EpochSeconds = int64_t;

// Parses "YYYY-MM-DDThh:mm:ssZ". Returns nullopt on any deviation.
std::optional<EpochSeconds> parse_timestamp(const std::string& s);

// Parses "YYYY-MM-DD".
std::optional<Date> parse_date(const std::string& s);

std::string format_timestamp(EpochSeconds t);
std::string format_date(const Date& d);

EpochSeconds to_epoch(const Date& d, int hour = 0, int minute = 0, int second = 0);
Date to_date(EpochSeconds t);

// Days between two dates (b - a).
int64_t days_between(const Date& a, const Date& b);

Date add_days(const Date& d, int64_t days);

// Calendar month/year addition with end-of-month clamping:
// 2010-01-31 + 1 month = 2010-02-28.
Date add_months_clamped(const Date& d, int months);
Date add_years_clamped(const Date& d, int years);

unsigned days_in_month(int year, unsigned month);

}  // namespace radrec::timeutil
