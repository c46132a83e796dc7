#pragma once

// Independent oracles for the test suite. Deliberately implemented without
// the library code paths they check: calendar arithmetic is done with the
// civil-days formulas rather than <chrono>, and the adherence oracle scans
// all report pairs instead of using timelines.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "radrec/adherence.hpp"
#include "radrec/corpus.hpp"
#include "radrec/timeutil.hpp"

namespace radrec::testsupport {

// Howard Hinnant's civil-days formulas.
inline int64_t oracle_days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = unsigned(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + int64_t(doe) - 719468;
}

inline timeutil::Date oracle_civil_from_days(int64_t z) {
  z += 719468;
  const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = unsigned(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int y = int(yoe) + int(era) * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return timeutil::Date{y + (m <= 2), m, d};
}

inline bool oracle_is_leap(int y) { return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0); }

inline unsigned oracle_days_in_month(int y, unsigned m) {
  static const unsigned lengths[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && oracle_is_leap(y)) return 29;
  return lengths[m - 1];
}

// unit is 'D', 'W', 'M' or 'Y'; month/year addition clamps to month end.
inline timeutil::Date oracle_project(const timeutil::Date& base, char unit, int n) {
  if (unit == 'D' || unit == 'W') {
    int64_t days = unit == 'W' ? 7LL * n : n;
    return oracle_civil_from_days(oracle_days_from_civil(base.year, base.month, base.day) + days);
  }
  int months = unit == 'Y' ? 12 * n : n;
  int total = int(base.month) - 1 + months;
  int year = base.year + total / 12;
  int month = total % 12 + 1;
  unsigned day = std::min(base.day, oracle_days_in_month(year, unsigned(month)));
  return timeutil::Date{year, unsigned(month), day};
}

// --- brute-force adherence oracle ---------------------------------------------

struct OracleReport {
  std::string report_id;
  std::string patient_id;
  corpus::Modality modality;
  timeutil::EpochSeconds timestamp;
};

struct OracleRec {
  std::string report_id;
  // (unit, hi magnitude) per normalized time frame
  std::vector<std::pair<char, int>> timeframes;
};

struct OracleSameModality {
  std::map<corpus::Modality, uint64_t> with, without;
};

inline OracleSameModality oracle_same_modality(const std::vector<OracleReport>& reports,
                                               const std::vector<std::string>& rec_ids) {
  OracleSameModality out;
  for (const std::string& id : rec_ids) {
    const OracleReport* rec = nullptr;
    for (const auto& r : reports) {
      if (r.report_id == id) rec = &r;
    }
    if (!rec) continue;
    bool followed = false;
    for (const auto& other : reports) {
      if (other.patient_id == rec->patient_id && other.modality == rec->modality &&
          other.timestamp > rec->timestamp)
        followed = true;
    }
    (followed ? out.with : out.without)[rec->modality]++;
  }
  return out;
}

struct OracleTimedCounts {
  std::map<corpus::Modality, std::array<uint64_t, 4>> counts;  // no, early, late, censored
};

inline timeutil::Date oracle_day_of(timeutil::EpochSeconds t) {
  int64_t dayno = t >= 0 ? t / 86400 : (t - 86399) / 86400;
  return oracle_civil_from_days(dayno);
}

inline OracleTimedCounts oracle_timed(const std::vector<OracleReport>& reports,
                                      const std::vector<OracleRec>& recs,
                                      const timeutil::Date& dataset_end, int grace_days) {
  OracleTimedCounts out;
  for (const OracleRec& rec : recs) {
    if (rec.timeframes.empty()) continue;
    const OracleReport* report = nullptr;
    for (const auto& r : reports) {
      if (r.report_id == rec.report_id) report = &r;
    }
    if (!report) continue;

    // first strictly-later same-modality report, scanning all pairs
    const OracleReport* first_later = nullptr;
    for (const auto& other : reports) {
      if (other.patient_id != report->patient_id) continue;
      if (other.modality != report->modality) continue;
      if (other.timestamp <= report->timestamp) continue;
      if (!first_later || other.timestamp < first_later->timestamp ||
          (other.timestamp == first_later->timestamp && other.report_id < first_later->report_id))
        first_later = &other;
    }

    timeutil::Date base = oracle_day_of(report->timestamp);
    bool any_no = false, any_late = false;
    size_t censored = 0;
    for (const auto& [unit, n] : rec.timeframes) {
      timeutil::Date projected = oracle_project(base, unit, n);
      if (projected > dataset_end) {
        ++censored;
        continue;
      }
      if (!first_later) {
        any_no = true;
        continue;
      }
      timeutil::Date later_day = oracle_day_of(first_later->timestamp);
      timeutil::Date cutoff = oracle_civil_from_days(
          oracle_days_from_civil(projected.year, projected.month, projected.day) + grace_days);
      if (later_day > cutoff) any_late = true;
    }

    size_t idx;
    if (censored == rec.timeframes.size()) {
      idx = 3;
    } else if (any_no) {
      idx = 0;
    } else if (any_late) {
      idx = 2;
    } else {
      idx = 1;  // every remaining recommendation was met on time
    }
    out.counts[report->modality][idx]++;
  }
  return out;
}

}  // namespace radrec::testsupport
