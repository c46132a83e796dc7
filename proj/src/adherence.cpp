#include "radrec/adherence.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace radrec::adherence {

const std::string& outcome_name(Outcome o) {
  static const std::array<std::string, 4> names = {"no_followup", "early", "late", "censored"};
  return names[static_cast<size_t>(o)];
}

std::map<std::string, Timeline> build_timelines(const std::vector<ReportRef>& reports) {
  std::map<std::string, Timeline> timelines;
  for (const ReportRef& r : reports) {
    Timeline& t = timelines[r.patient_id];
    t.patient_id = r.patient_id;
    t.entries.push_back(TimelineEntry{r.report_id, r.modality, r.timestamp});
  }
  for (auto& [_, t] : timelines) {
    std::sort(t.entries.begin(), t.entries.end(), [](const TimelineEntry& a, const TimelineEntry& b) {
      if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
      return a.report_id < b.report_id;
    });
  }
  return timelines;
}

// First entry of the given modality with a strictly greater timestamp.
static const TimelineEntry* first_later_same_modality(const Timeline& t,
                                                      timeutil::EpochSeconds after,
                                                      corpus::Modality modality) {
  for (const TimelineEntry& e : t.entries) {
    if (e.timestamp > after && e.modality == modality) return &e;
  }
  return nullptr;
}

std::map<corpus::Modality, SameModalityCounts> analyze_same_modality(
    const std::map<std::string, Timeline>& timelines, const std::vector<ReportRef>& rec_reports) {
  std::map<corpus::Modality, SameModalityCounts> counts;
  for (const ReportRef& r : rec_reports) {
    auto it = timelines.find(r.patient_id);
    const TimelineEntry* later =
        it == timelines.end() ? nullptr
                              : first_later_same_modality(it->second, r.timestamp, r.modality);
    if (later) {
      counts[r.modality].with_followup++;
    } else {
      counts[r.modality].without_followup++;
    }
  }
  return counts;
}

TimedAnalysis analyze_timed(const std::map<std::string, Timeline>& timelines,
                            const std::vector<ReportRef>& reports,
                            const std::vector<RecommendationReport>& recommendations,
                            const timeutil::Date& dataset_end, int grace_days) {
  std::unordered_map<std::string, const ReportRef*> by_id;
  for (const ReportRef& r : reports) by_id.emplace(r.report_id, &r);

  TimedAnalysis out;
  for (const RecommendationReport& rec : recommendations) {
    if (rec.timeframes.empty()) continue;  // participation requires a normalized time frame
    auto rit = by_id.find(rec.report_id);
    if (rit == by_id.end())
      throw std::invalid_argument("analyze_timed: unknown report_id " + rec.report_id);
    const ReportRef& report = *rit->second;
    const timeutil::Date report_day = timeutil::to_date(report.timestamp);

    auto tl = timelines.find(report.patient_id);
    AdherenceRecord record;
    record.report_id = rec.report_id;
    record.modality = report.modality;

    bool any_no = false, any_late = false, any_early = false;
    for (const temporal::NormalizedTimeFrame& tf : rec.timeframes) {
      timeutil::Date projected = temporal::project_date(report_day, tf);
      Outcome o;
      if (projected > dataset_end) {
        o = Outcome::Censored;
      } else {
        const TimelineEntry* later =
            tl == timelines.end()
                ? nullptr
                : first_later_same_modality(tl->second, report.timestamp, report.modality);
        if (!later) {
          o = Outcome::NoFollowup;
        } else {
          timeutil::Date later_day = timeutil::to_date(later->timestamp);
          timeutil::Date cutoff = timeutil::add_days(projected, grace_days);
          o = later_day <= cutoff ? Outcome::Early : Outcome::Late;
        }
      }
      record.per_recommendation.emplace_back(projected, o);
      if (o == Outcome::NoFollowup) any_no = true;
      if (o == Outcome::Late) any_late = true;
      if (o == Outcome::Early) any_early = true;
    }

    Outcome report_outcome;
    if (!any_no && !any_late && !any_early) {
      report_outcome = Outcome::Censored;  // every recommendation censored
    } else if (any_no) {
      report_outcome = Outcome::NoFollowup;
    } else if (any_late) {
      report_outcome = Outcome::Late;
    } else {
      report_outcome = Outcome::Early;
    }
    record.report_outcome = report_outcome;

    TimedCounts& c = out.per_modality[report.modality];
    switch (report_outcome) {
      case Outcome::NoFollowup: c.no_followup++; break;
      case Outcome::Early: c.early++; break;
      case Outcome::Late: c.late++; break;
      case Outcome::Censored: c.censored++; break;
    }
    out.records.push_back(std::move(record));
  }
  return out;
}

static std::string share(uint64_t count, uint64_t total) {
  char buf[16];
  double f = total == 0 ? 0.0 : double(count) / double(total);
  std::snprintf(buf, sizeof(buf), "%.2f", f);
  return buf;
}

std::string same_modality_csv(const std::map<corpus::Modality, SameModalityCounts>& counts) {
  std::ostringstream out;
  out << "modality,n_reports,without_followup,without_followup_share,with_followup,"
         "with_followup_share\n";
  for (corpus::Modality m : corpus::all_modalities()) {
    auto it = counts.find(m);
    if (it == counts.end()) continue;
    const SameModalityCounts& c = it->second;
    uint64_t n = c.total();
    out << corpus::modality_name(m) << ',' << n << ',' << c.without_followup << ','
        << share(c.without_followup, n) << ',' << c.with_followup << ','
        << share(c.with_followup, n) << '\n';
  }
  return out.str();
}

std::string timed_csv(const std::map<corpus::Modality, TimedCounts>& counts) {
  std::ostringstream out;
  out << "modality,n_reports,no_followup,no_followup_share,early,early_share,late,late_share,"
         "censored\n";
  for (corpus::Modality m : corpus::all_modalities()) {
    auto it = counts.find(m);
    if (it == counts.end()) continue;
    const TimedCounts& c = it->second;
    uint64_t n = c.participating();
    out << corpus::modality_name(m) << ',' << n << ',' << c.no_followup << ','
        << share(c.no_followup, n) << ',' << c.early << ',' << share(c.early, n) << ',' << c.late
        << ',' << share(c.late, n) << ',' << c.censored << '\n';
  }
  return out.str();
}

}  // namespace radrec::adherence
