#pragma once

#include <string>
#include <vector>

namespace radrec::testsupport {

struct TemporalGoldenCase {
  std::string input;
  // "point P3M" | "range P6M P12M" | "fail UNSUPPORTED_PHRASE"
  std::string expected;
};

// Golden normalization suite. The anchored cases come from the published
// examples; the rest pin the documented grammar.
inline const std::vector<TemporalGoldenCase>& temporal_golden_cases() {
  static const std::vector<TemporalGoldenCase> cases = {
      {"3 months", "point P3M"},
      {"1 year", "point P1Y"},
      {"6 to 12 months", "range P6M P12M"},
      {"4-5 weeks", "range P4W P5W"},
      {"second trimester", "fail UNSUPPORTED_PHRASE"},
      {"one year", "point P1Y"},
      {"12 months", "point P12M"},
      {"1-3 weeks", "range P1W P3W"},
      {"2 weeks", "point P2W"},
      {"4 weeks", "point P4W"},
      {"6 weeks", "point P6W"},
      {"1 month", "point P1M"},
      {"2 months", "point P2M"},
      {"6 months", "point P6M"},
      {"2 years", "point P2Y"},
      {"10 days", "point P10D"},
      {"1 day", "point P1D"},
      {"30 days", "point P30D"},
      {"three months", "point P3M"},
      {"two weeks", "point P2W"},
      {"twenty days", "point P20D"},
      {"six to twelve months", "range P6M P12M"},
      {"3 mos", "point P3M"},
      {"6 wks", "point P6W"},
      {"1 yr", "point P1Y"},
      {"2 yrs", "point P2Y"},
      {"1 wk", "point P1W"},
      {"6 mo", "point P6M"},
      {"annual", "point P1Y"},
      {"annually", "point P1Y"},
      {"Annual", "point P1Y"},
      {"3 MONTHS", "point P3M"},
      {"3 Months.", "point P3M"},
      {"(3 months)", "point P3M"},
      {"in 3 months", "point P3M"},
      {"within 6 months", "point P6M"},
      {"3  months", "point P3M"},
      {"8-10 days", "range P8D P10D"},
      {"2 to 3 weeks", "range P2W P3W"},
      {"5-3 weeks", "fail INVERTED_RANGE"},
      {"12 to 6 months", "fail INVERTED_RANGE"},
      {"several weeks", "fail NO_NUMBER"},
      {"weeks", "fail NO_NUMBER"},
      {"a few days", "fail NO_NUMBER"},
      {"4-5", "fail NO_UNIT"},
      {"12", "fail NO_UNIT"},
      {"three", "fail NO_UNIT"},
      {"the next visit", "fail UNSUPPORTED_PHRASE"},
      {"short interval", "fail UNSUPPORTED_PHRASE"},
      {"as clinically indicated", "fail UNSUPPORTED_PHRASE"},
      {"", "fail UNSUPPORTED_PHRASE"},
      {"0 months", "fail UNSUPPORTED_PHRASE"},
  };
  return cases;
}

}  // namespace radrec::testsupport
