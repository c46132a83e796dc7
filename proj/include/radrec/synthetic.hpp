#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "radrec/adherence.hpp"
#include "radrec/corpus.hpp"
#include "radrec/timeutil.hpp"

namespace radrec::synthetic {

// Template-generated corpus: recommendation sentences, entity spans, and each
// patient's subsequent encounters are constructed together so the gold
// adherence outcomes are known without running the analyzer.
struct Config {
  size_t n_reports = 500;
  size_t patients = 120;
  double positive_rate = 0.05;  // per-sentence recommendation probability
  double sentences_per_report = 8.0;
  std::map<corpus::Modality, double> modality_mix;  // empty -> built-in default

  // Report-level outcome profile for recommendation reports (normalized).
  double p_no_followup = 0.35;
  double p_early = 0.25;
  double p_late = 0.30;
  double p_censored = 0.10;

  double timeframe_rate = 0.85;   // rec sentences carrying a time frame entity
  double unparseable_rate = 0.05; // of those, share drawn from unsupported phrases
  double test_rate = 0.90;
  double reason_rate = 0.60;

  timeutil::Date window_start{2008, 1, 1};
  timeutil::Date window_end{2017, 12, 31};
  std::vector<std::string> institutions{"UWMC", "HMC"};
  double header_rate = 0.25;
};

struct GoldReport {
  corpus::AnnotatedReport annotated;
  bool has_recommendation = false;
  bool followed = false;  // same-modality encounter strictly later exists
  std::optional<adherence::Outcome> timed_outcome;
  size_t timed_recommendations = 0;
};

struct Corpus {
  std::vector<GoldReport> reports;
  timeutil::Date dataset_end;
};

// Deterministic in (config, seed); throws std::invalid_argument on bad ranges.
Corpus generate(const Config& config, uint64_t seed);

std::map<corpus::Modality, adherence::SameModalityCounts> gold_same_modality(const Corpus& c);
std::map<corpus::Modality, adherence::TimedCounts> gold_timed(const Corpus& c);
std::string gold_outcomes_csv(const Corpus& c);

}  // namespace radrec::synthetic
