#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "radrec/corpus.hpp"
#include "radrec/temporal.hpp"
#include "radrec/timeutil.hpp"

namespace radrec::adherence {

struct TimelineEntry {
  std::string report_id;
  corpus::Modality modality;
  timeutil::EpochSeconds timestamp;
};

struct Timeline {
  std::string patient_id;
  // Sorted by timestamp, ties broken by report_id.
  std::vector<TimelineEntry> entries;
};

// What the analyses need to know about a report; text is deliberately absent
// so whole-corpus analysis stays compact.
struct ReportRef {
  std::string report_id;
  std::string patient_id;
  corpus::Modality modality;
  timeutil::EpochSeconds timestamp;
};

std::map<std::string, Timeline> build_timelines(const std::vector<ReportRef>& reports);

// A report flagged as containing recommendations, with whatever time frames
// were successfully normalized (one entry per timeframe entity).
struct RecommendationReport {
  std::string report_id;
  std::vector<temporal::NormalizedTimeFrame> timeframes;
};

enum class Outcome { NoFollowup, Early, Late, Censored };
const std::string& outcome_name(Outcome o);

struct SameModalityCounts {
  uint64_t with_followup = 0;
  uint64_t without_followup = 0;
  uint64_t total() const { return with_followup + without_followup; }
};

struct TimedCounts {
  uint64_t no_followup = 0;
  uint64_t early = 0;
  uint64_t late = 0;
  uint64_t censored = 0;
  // Participating and uncensored; the three outcome columns partition this.
  uint64_t participating() const { return no_followup + early + late; }
};

struct AdherenceRecord {
  std::string report_id;
  corpus::Modality modality;
  std::vector<std::pair<timeutil::Date, Outcome>> per_recommendation;
  std::optional<Outcome> report_outcome;  // empty when no timed recommendations
};

// A report counts as followed iff the same patient has any strictly later
// report of the same modality.
std::map<corpus::Modality, SameModalityCounts> analyze_same_modality(
    const std::map<std::string, Timeline>& timelines, const std::vector<ReportRef>& rec_reports);

struct TimedAnalysis {
  std::map<corpus::Modality, TimedCounts> per_modality;
  std::vector<AdherenceRecord> records;
};

// Timed follow-up with censoring. Only reports carrying at least one
// normalized time frame participate. Per recommendation: project the due
// date from the report day using the end of the range; censored when
// projected > dataset_end; else the first strictly-later same-modality
// report decides early (on or before projected + grace) vs late, and its
// absence means no follow-up. Report level: all censored -> censored;
// any no-followup -> no-followup; else any late -> late; else early.
TimedAnalysis analyze_timed(const std::map<std::string, Timeline>& timelines,
                            const std::vector<ReportRef>& reports_by_id_source,
                            const std::vector<RecommendationReport>& recommendations,
                            const timeutil::Date& dataset_end, int grace_days = 0);

// CSV writers matching the published table layout: counts plus fractional
// shares formatted to 2 decimals.
std::string same_modality_csv(const std::map<corpus::Modality, SameModalityCounts>& counts);
std::string timed_csv(const std::map<corpus::Modality, TimedCounts>& counts);

}  // namespace radrec::adherence
