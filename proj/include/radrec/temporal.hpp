#pragma once

#include <optional>
#include <string>

#include "radrec/timeutil.hpp"

namespace radrec::temporal {

enum class Unit : char { Day = 'D', Week = 'W', Month = 'M', Year = 'Y' };

// Stable failure codes; these strings are part of the analytics output.
enum class ParseFailure { UnsupportedPhrase, NoNumber, NoUnit, InvertedRange };

const std::string& failure_code_name(ParseFailure f);

struct NormalizedTimeFrame {
  std::string raw;
  bool is_range = false;
  Unit unit = Unit::Month;
  int lo_magnitude = 0;
  int hi_magnitude = 0;  // == lo_magnitude for points

  std::string lo() const;  // ISO-8601 duration, e.g. "P3M"
  std::string hi() const;

  // Day-equivalent of hi (W=7D, M=30D, Y=365D). Ordering only, never used
  // for date projection.
  int64_t hi_ordering_days() const;
  int64_t lo_ordering_days() const;

  bool operator==(const NormalizedTimeFrame&) const = default;
};

struct ParseResult {
  std::optional<NormalizedTimeFrame> value;
  std::optional<ParseFailure> failure;

  bool ok() const { return value.has_value(); }
};

// Grammar (case-insensitive, surrounding punctuation tolerated, optional
// leading "in"/"within"):
//   <n> <unit> | <n>-<m> <unit> | <n> to <m> <unit> | annual | annually
// where <n>,<m> are digit strings or the number words one..twenty, and units
// are day(s), week(s)/wk(s), month(s)/mo(s), year(s)/yr(s).
// Never throws; unparseable phrases come back as typed failures.
ParseResult parse_timeframe(const std::string& text);

// Parses "P<n><U>". Used for round-trip checks and stored durations.
std::optional<NormalizedTimeFrame> parse_iso_duration(const std::string& s);

// Projects the follow-up due date: base plus the END of the range.
// D adds days, W adds 7n days, M/Y add calendar months/years with
// end-of-month clamping.
timeutil::Date project_date(const timeutil::Date& base, const NormalizedTimeFrame& tf);

}  // namespace radrec::temporal
