#include "radrec/temporal.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <sstream>
#include <unordered_map>
#include <vector>

namespace radrec::temporal {

const std::string& failure_code_name(ParseFailure f) {
  static const std::array<std::string, 4> names = {
      "UNSUPPORTED_PHRASE",
      "NO_NUMBER",
      "NO_UNIT",
      "INVERTED_RANGE",
  };
  return names[static_cast<size_t>(f)];
}

std::string NormalizedTimeFrame::lo() const {
  return "P" + std::to_string(lo_magnitude) + std::string(1, static_cast<char>(unit));
}

std::string NormalizedTimeFrame::hi() const {
  return "P" + std::to_string(hi_magnitude) + std::string(1, static_cast<char>(unit));
}

static int64_t ordering_days(Unit u, int n) {
  switch (u) {
    case Unit::Day: return n;
    case Unit::Week: return 7LL * n;
    case Unit::Month: return 30LL * n;
    case Unit::Year: return 365LL * n;
  }
  return n;
}

int64_t NormalizedTimeFrame::hi_ordering_days() const { return ordering_days(unit, hi_magnitude); }
int64_t NormalizedTimeFrame::lo_ordering_days() const { return ordering_days(unit, lo_magnitude); }

namespace {

std::optional<int> number_word(const std::string& w) {
  static const std::unordered_map<std::string, int> words = {
      {"one", 1},     {"two", 2},       {"three", 3},    {"four", 4},     {"five", 5},
      {"six", 6},     {"seven", 7},     {"eight", 8},    {"nine", 9},     {"ten", 10},
      {"eleven", 11}, {"twelve", 12},   {"thirteen", 13}, {"fourteen", 14}, {"fifteen", 15},
      {"sixteen", 16}, {"seventeen", 17}, {"eighteen", 18}, {"nineteen", 19}, {"twenty", 20},
  };
  auto it = words.find(w);
  if (it == words.end()) return std::nullopt;
  return it->second;
}

std::optional<Unit> unit_word(const std::string& w) {
  static const std::unordered_map<std::string, Unit> units = {
      {"day", Unit::Day},     {"days", Unit::Day},
      {"week", Unit::Week},   {"weeks", Unit::Week},  {"wk", Unit::Week},  {"wks", Unit::Week},
      {"month", Unit::Month}, {"months", Unit::Month}, {"mo", Unit::Month}, {"mos", Unit::Month},
      {"year", Unit::Year},   {"years", Unit::Year},  {"yr", Unit::Year},  {"yrs", Unit::Year},
  };
  auto it = units.find(w);
  if (it == units.end()) return std::nullopt;
  return it->second;
}

std::optional<int> parse_number(const std::string& w) {
  if (!w.empty() && std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c); })) {
    if (w.size() > 4) return std::nullopt;  // no plausible magnitude that long
    return std::stoi(w);
  }
  return number_word(w);
}

bool is_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) && c != '-';
}

}  // namespace

ParseResult parse_timeframe(const std::string& text) {
  ParseResult result;

  // Lowercase, strip punctuation except '-', then split on whitespace and
  // break "4-5" style ranges into number / "-" / number.
  std::string lowered;
  lowered.reserve(text.size());
  for (char c : text) {
    if (is_punct(c)) {
      lowered.push_back(' ');
    } else {
      lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }

  std::vector<std::string> tokens;
  std::istringstream in(lowered);
  std::string w;
  while (in >> w) {
    size_t dash = w.find('-');
    if (dash != std::string::npos && dash > 0 && dash + 1 < w.size()) {
      tokens.push_back(w.substr(0, dash));
      tokens.push_back("-");
      tokens.push_back(w.substr(dash + 1));
    } else {
      // strip stray dashes ("-5", "5-")
      std::string clean;
      for (char c : w)
        if (c != '-') clean.push_back(c);
      if (!clean.empty()) tokens.push_back(clean);
    }
  }

  // Drop a leading preposition; the annotated phrases sometimes carry one.
  if (!tokens.empty() && (tokens[0] == "in" || tokens[0] == "within")) {
    tokens.erase(tokens.begin());
  }

  auto fail = [&](ParseFailure f) {
    result.failure = f;
    return result;
  };

  if (tokens.empty()) return fail(ParseFailure::UnsupportedPhrase);

  if (tokens.size() == 1 && (tokens[0] == "annual" || tokens[0] == "annually")) {
    result.value = NormalizedTimeFrame{text, false, Unit::Year, 1, 1};
    return result;
  }

  // Accepted shapes over the token list:
  //   N UNIT | N - M UNIT | N to M UNIT
  std::optional<int> lo_n, hi_n;
  std::optional<Unit> unit;
  bool shape_ok = false;

  if (tokens.size() == 2) {
    lo_n = parse_number(tokens[0]);
    unit = unit_word(tokens[1]);
    hi_n = lo_n;
    shape_ok = lo_n && unit;
  } else if (tokens.size() == 4 && (tokens[1] == "-" || tokens[1] == "to")) {
    lo_n = parse_number(tokens[0]);
    hi_n = parse_number(tokens[2]);
    unit = unit_word(tokens[3]);
    shape_ok = lo_n && hi_n && unit;
  }

  if (!shape_ok) {
    // Classify what is missing for diagnostics.
    bool any_number = false, any_unit = false;
    for (const std::string& t : tokens) {
      if (parse_number(t)) any_number = true;
      if (unit_word(t)) any_unit = true;
    }
    if (any_unit && !any_number) return fail(ParseFailure::NoNumber);
    if (any_number && !any_unit) return fail(ParseFailure::NoUnit);
    return fail(ParseFailure::UnsupportedPhrase);
  }

  if (*lo_n <= 0 || *hi_n <= 0) return fail(ParseFailure::UnsupportedPhrase);
  if (*lo_n > *hi_n) return fail(ParseFailure::InvertedRange);

  NormalizedTimeFrame tf;
  tf.raw = text;
  tf.is_range = *lo_n != *hi_n || tokens.size() == 4;
  tf.unit = *unit;
  tf.lo_magnitude = *lo_n;
  tf.hi_magnitude = *hi_n;
  result.value = tf;
  return result;
}

std::optional<NormalizedTimeFrame> parse_iso_duration(const std::string& s) {
  if (s.size() < 3 || s[0] != 'P') return std::nullopt;
  char u = s.back();
  if (u != 'D' && u != 'W' && u != 'M' && u != 'Y') return std::nullopt;
  std::string digits = s.substr(1, s.size() - 2);
  if (digits.empty() ||
      !std::all_of(digits.begin(), digits.end(), [](unsigned char c) { return std::isdigit(c); }))
    return std::nullopt;
  if (digits.size() > 6) return std::nullopt;
  NormalizedTimeFrame tf;
  tf.raw = s;
  tf.unit = static_cast<Unit>(u);
  tf.lo_magnitude = tf.hi_magnitude = std::stoi(digits);
  if (tf.lo_magnitude <= 0) return std::nullopt;
  return tf;
}

timeutil::Date project_date(const timeutil::Date& base, const NormalizedTimeFrame& tf) {
  const int n = tf.hi_magnitude;  // end of range rule
  switch (tf.unit) {
    case Unit::Day: return timeutil::add_days(base, n);
    case Unit::Week: return timeutil::add_days(base, 7LL * n);
    case Unit::Month: return timeutil::add_months_clamped(base, n);
    case Unit::Year: return timeutil::add_years_clamped(base, n);
  }
  return base;
}

}  // namespace radrec::temporal
