#include <doctest.h>

#include <sstream>

#include "radrec/rng.hpp"
#include "radrec/temporal.hpp"
#include "support/temporal_golden.hpp"
#include "support/test_oracles.hpp"

using namespace radrec;
using temporal::NormalizedTimeFrame;
using temporal::ParseFailure;
using temporal::Unit;
using timeutil::Date;

static std::string describe(const temporal::ParseResult& r) {
  if (r.ok()) {
    const NormalizedTimeFrame& tf = *r.value;
    if (tf.is_range && tf.lo() != tf.hi()) return "range " + tf.lo() + " " + tf.hi();
    if (tf.is_range) return "range " + tf.lo() + " " + tf.hi();
    return "point " + tf.hi();
  }
  return "fail " + temporal::failure_code_name(*r.failure);
}

TEST_CASE("golden normalization suite") {
  size_t checked = 0;
  for (const auto& c : testsupport::temporal_golden_cases()) {
    CAPTURE(c.input);
    CHECK(describe(temporal::parse_timeframe(c.input)) == c.expected);
    ++checked;
  }
  CHECK(checked >= 40);
}

TEST_CASE("published normalization examples") {
  auto r = temporal::parse_timeframe("3 months");
  REQUIRE(r.ok());
  CHECK(r.value->hi() == "P3M");
  CHECK_FALSE(r.value->is_range);

  r = temporal::parse_timeframe("6 to 12 months");
  REQUIRE(r.ok());
  CHECK(r.value->lo() == "P6M");
  CHECK(r.value->hi() == "P12M");

  r = temporal::parse_timeframe("4-5 weeks");
  REQUIRE(r.ok());
  CHECK(r.value->lo() == "P4W");
  CHECK(r.value->hi() == "P5W");

  r = temporal::parse_timeframe("second trimester");
  REQUIRE_FALSE(r.ok());
  CHECK(*r.failure == ParseFailure::UnsupportedPhrase);
}

TEST_CASE("duration strings match the documented pattern") {
  for (const auto& c : testsupport::temporal_golden_cases()) {
    auto r = temporal::parse_timeframe(c.input);
    if (!r.ok()) continue;
    for (const std::string& s : {r.value->lo(), r.value->hi()}) {
      CAPTURE(s);
      REQUIRE(s.size() >= 3);
      CHECK(s.front() == 'P');
      CHECK((s.back() == 'D' || s.back() == 'W' || s.back() == 'M' || s.back() == 'Y'));
      for (size_t i = 1; i + 1 < s.size(); ++i) CHECK(std::isdigit(s[i]));
    }
    CHECK(r.value->lo_ordering_days() <= r.value->hi_ordering_days());
  }
}

TEST_CASE("projection: weeks add whole days") {
  NormalizedTimeFrame tf;
  tf.unit = Unit::Week;
  tf.lo_magnitude = tf.hi_magnitude = 3;
  CHECK(temporal::project_date(Date{2010, 3, 1}, tf) == Date{2010, 3, 22});
}

TEST_CASE("projection: month arithmetic clamps to month end") {
  NormalizedTimeFrame tf;
  tf.unit = Unit::Month;
  tf.lo_magnitude = tf.hi_magnitude = 1;
  CHECK(temporal::project_date(Date{2010, 1, 31}, tf) == Date{2010, 2, 28});
  CHECK(temporal::project_date(Date{2012, 1, 31}, tf) == Date{2012, 2, 29});  // leap year
  tf.hi_magnitude = 12;
  CHECK(temporal::project_date(Date{2010, 6, 15}, tf) == Date{2011, 6, 15});
}

TEST_CASE("projection uses the end of a range") {
  auto r = temporal::parse_timeframe("6 to 12 months");
  REQUIRE(r.ok());
  CHECK(temporal::project_date(Date{2010, 6, 15}, *r.value) == Date{2011, 6, 15});
}

TEST_CASE("projection agrees with the independent calendar oracle") {
  Rng rng(77);
  for (int iter = 0; iter < 2000; ++iter) {
    Date base{2000 + int(rng.index(30)), unsigned(1 + rng.index(12)), 1};
    base.day = unsigned(1 + rng.index(timeutil::days_in_month(base.year, base.month)));
    NormalizedTimeFrame tf;
    switch (rng.index(4)) {
      case 0: tf.unit = Unit::Day; break;
      case 1: tf.unit = Unit::Week; break;
      case 2: tf.unit = Unit::Month; break;
      default: tf.unit = Unit::Year; break;
    }
    tf.lo_magnitude = tf.hi_magnitude = int(1 + rng.index(30));
    Date got = temporal::project_date(base, tf);
    Date want = testsupport::oracle_project(base, char(tf.unit), tf.hi_magnitude);
    CAPTURE(base.year);
    CAPTURE(base.month);
    CAPTURE(base.day);
    CAPTURE(char(tf.unit));
    CAPTURE(tf.hi_magnitude);
    CHECK(got == want);
  }
}

TEST_CASE("round trip: hi re-parses to an equal duration") {
  for (const auto& c : testsupport::temporal_golden_cases()) {
    auto r = temporal::parse_timeframe(c.input);
    if (!r.ok()) continue;
    auto back = temporal::parse_iso_duration(r.value->hi());
    REQUIRE(back.has_value());
    CHECK(back->unit == r.value->unit);
    CHECK(back->hi_magnitude == r.value->hi_magnitude);
  }
}

TEST_CASE("monotonicity: longer duration never projects earlier") {
  Rng rng(99);
  for (int iter = 0; iter < 500; ++iter) {
    Date base{2005 + int(rng.index(20)), unsigned(1 + rng.index(12)),
              unsigned(1 + rng.index(28))};
    NormalizedTimeFrame a, b;
    a.unit = b.unit = Unit(std::string("DWMY")[rng.index(4)]);
    a.lo_magnitude = a.hi_magnitude = int(1 + rng.index(24));
    b.lo_magnitude = b.hi_magnitude = a.hi_magnitude + int(rng.index(12));
    Date pa = temporal::project_date(base, a);
    Date pb = temporal::project_date(base, b);
    CHECK(pa <= pb);
  }
}

TEST_CASE("parse never throws on arbitrary input") {
  Rng rng(13);
  const std::string alphabet = "abcdefghij0123456789 -.,()/toinmoswkyr";
  for (int iter = 0; iter < 5000; ++iter) {
    std::string s;
    size_t n = rng.index(18);
    for (size_t i = 0; i < n; ++i) s.push_back(alphabet[rng.index(alphabet.size())]);
    auto r = temporal::parse_timeframe(s);  // must return, not throw
    CHECK((r.ok() || r.failure.has_value()));
  }
}
