#include <doctest.h>

#include "radrec/adherence.hpp"
#include "radrec/rng.hpp"
#include "radrec/temporal.hpp"
#include "support/test_oracles.hpp"

using namespace radrec;
using adherence::Outcome;
using adherence::RecommendationReport;
using adherence::ReportRef;
using corpus::Modality;
using timeutil::Date;

static ReportRef ref(const std::string& id, const std::string& patient, Modality m,
                     const std::string& day, int hour = 9) {
  auto d = timeutil::parse_date(day);
  REQUIRE(d.has_value());
  return ReportRef{id, patient, m, timeutil::to_epoch(*d, hour)};
}

static temporal::NormalizedTimeFrame tf(char unit, int lo, int hi) {
  temporal::NormalizedTimeFrame t;
  t.unit = temporal::Unit(unit);
  t.lo_magnitude = lo;
  t.hi_magnitude = hi;
  t.is_range = lo != hi;
  return t;
}

TEST_CASE("timelines group by patient and sort by time then id") {
  std::vector<ReportRef> reports = {
      ref("R3", "P1", Modality::CT, "2010-05-01"),
      ref("R1", "P1", Modality::CT, "2010-01-01"),
      ref("R2", "P2", Modality::MRI, "2010-03-01"),
  };
  auto timelines = adherence::build_timelines(reports);
  REQUIRE(timelines.size() == 2);
  CHECK(timelines.at("P1").entries.size() == 2);
  CHECK(timelines.at("P1").entries[0].report_id == "R1");
  CHECK(timelines.at("P2").entries.size() == 1);
}

TEST_CASE("equal timestamps order by report_id, input order irrelevant") {
  std::vector<ReportRef> reports = {
      ref("RB", "P1", Modality::CT, "2010-01-01"),
      ref("RA", "P1", Modality::CT, "2010-01-01"),
  };
  auto t1 = adherence::build_timelines(reports);
  std::swap(reports[0], reports[1]);
  auto t2 = adherence::build_timelines(reports);
  CHECK(t1.at("P1").entries[0].report_id == "RA");
  CHECK(t2.at("P1").entries[0].report_id == "RA");
}

TEST_CASE("same-modality analysis basics") {
  std::vector<ReportRef> all = {
      ref("R1", "P1", Modality::CT, "2010-01-01"),
      ref("R2", "P1", Modality::CT, "2010-01-02"),  // next-day follow-up
      ref("R3", "P2", Modality::CT, "2010-01-01"),  // last encounter for P2
      ref("R4", "P2", Modality::MRI, "2010-06-01"), // different modality
  };
  auto timelines = adherence::build_timelines(all);
  auto counts = adherence::analyze_same_modality(timelines, {all[0], all[2]});
  CHECK(counts.at(Modality::CT).with_followup == 1);
  CHECK(counts.at(Modality::CT).without_followup == 1);
}

TEST_CASE("same timestamp is not a follow-up") {
  std::vector<ReportRef> all = {
      ref("R1", "P1", Modality::CT, "2010-01-01"),
      ref("R2", "P1", Modality::CT, "2010-01-01"),
  };
  auto timelines = adherence::build_timelines(all);
  auto counts = adherence::analyze_same_modality(timelines, {all[0]});
  CHECK(counts.at(Modality::CT).without_followup == 1);
}

TEST_CASE("timed analysis: encounter exactly on the projected date is early") {
  std::vector<ReportRef> all = {
      ref("R1", "P1", Modality::CT, "2010-01-01"),
      ref("R2", "P1", Modality::CT, "2010-04-01"),
  };
  auto timelines = adherence::build_timelines(all);
  // P3M from 2010-01-01 projects to 2010-04-01 exactly.
  auto analysis = adherence::analyze_timed(timelines, all, {{"R1", {tf('M', 3, 3)}}},
                                           Date{2018, 1, 1}, 0);
  CHECK(analysis.per_modality.at(Modality::CT).early == 1);
  CHECK(analysis.records[0].report_outcome == Outcome::Early);
}

TEST_CASE("timed analysis: projection beyond dataset end is censored") {
  std::vector<ReportRef> all = {ref("R1", "P1", Modality::CT, "2017-12-01")};
  auto timelines = adherence::build_timelines(all);
  auto analysis = adherence::analyze_timed(timelines, all, {{"R1", {tf('Y', 1, 1)}}},
                                           Date{2017, 12, 31}, 0);
  CHECK(analysis.per_modality.at(Modality::CT).censored == 1);
  CHECK(analysis.per_modality.at(Modality::CT).participating() == 0);
}

TEST_CASE("timed analysis: late and no-followup outcomes") {
  std::vector<ReportRef> all = {
      ref("R1", "P1", Modality::CT, "2010-01-01"),
      ref("R2", "P1", Modality::CT, "2011-06-01"),  // far past P3M projection
      ref("R3", "P2", Modality::CT, "2010-01-01"),  // no later CT at all
  };
  auto timelines = adherence::build_timelines(all);
  auto analysis = adherence::analyze_timed(
      timelines, all, {{"R1", {tf('M', 3, 3)}}, {"R3", {tf('M', 3, 3)}}}, Date{2018, 1, 1}, 0);
  CHECK(analysis.per_modality.at(Modality::CT).late == 1);
  CHECK(analysis.per_modality.at(Modality::CT).no_followup == 1);
}

TEST_CASE("grace days move the early/late boundary") {
  std::vector<ReportRef> all = {
      ref("R1", "P1", Modality::CT, "2010-01-01"),
      ref("R2", "P1", Modality::CT, "2010-04-05"),  // 4 days past the P3M projection
  };
  auto timelines = adherence::build_timelines(all);
  auto strict = adherence::analyze_timed(timelines, all, {{"R1", {tf('M', 3, 3)}}},
                                         Date{2018, 1, 1}, 0);
  CHECK(strict.per_modality.at(Modality::CT).late == 1);
  auto lenient = adherence::analyze_timed(timelines, all, {{"R1", {tf('M', 3, 3)}}},
                                          Date{2018, 1, 1}, 7);
  CHECK(lenient.per_modality.at(Modality::CT).early == 1);
}

TEST_CASE("report whose recommendations all go unanswered is no-followup") {
  std::vector<ReportRef> all = {
      ref("R1", "P1", Modality::CT, "2010-01-01"),
  };
  auto timelines = adherence::build_timelines(all);
  auto analysis = adherence::analyze_timed(timelines, all,
                                           {{"R1", {tf('W', 1, 1), tf('M', 3, 3)}}},
                                           Date{2018, 1, 1}, 0);
  // No encounter at all: every recommendation is no-followup.
  CHECK(analysis.records[0].report_outcome == Outcome::NoFollowup);
}

TEST_CASE("report aggregation: any late wins over early when nothing is missed") {
  std::vector<ReportRef> all = {
      ref("R1", "P1", Modality::CT, "2010-01-01"),
      ref("R2", "P1", Modality::CT, "2010-02-15"),  // after P1W projection, before P3M
  };
  auto timelines = adherence::build_timelines(all);
  auto analysis = adherence::analyze_timed(timelines, all,
                                           {{"R1", {tf('W', 1, 1), tf('M', 3, 3)}}},
                                           Date{2018, 1, 1}, 0);
  REQUIRE(analysis.records.size() == 1);
  CHECK(analysis.records[0].per_recommendation[0].second == Outcome::Late);
  CHECK(analysis.records[0].per_recommendation[1].second == Outcome::Early);
  CHECK(analysis.records[0].report_outcome == Outcome::Late);
}

TEST_CASE("mixed censoring drops censored recommendations from aggregation") {
  std::vector<ReportRef> all = {
      ref("R1", "P1", Modality::CT, "2017-11-01"),
      ref("R2", "P1", Modality::CT, "2017-11-20"),
  };
  auto timelines = adherence::build_timelines(all);
  // P1M projects inside the window (early via R2), P2Y projects outside.
  auto analysis = adherence::analyze_timed(timelines, all,
                                           {{"R1", {tf('M', 1, 1), tf('Y', 2, 2)}}},
                                           Date{2017, 12, 31}, 0);
  CHECK(analysis.records[0].report_outcome == Outcome::Early);
  CHECK(analysis.per_modality.at(Modality::CT).early == 1);
  CHECK(analysis.per_modality.at(Modality::CT).censored == 0);
}

TEST_CASE("only reports with normalized timeframes participate") {
  std::vector<ReportRef> all = {ref("R1", "P1", Modality::CT, "2010-01-01")};
  auto timelines = adherence::build_timelines(all);
  auto analysis =
      adherence::analyze_timed(timelines, all, {{"R1", {}}}, Date{2018, 1, 1}, 0);
  CHECK(analysis.records.empty());
  CHECK(analysis.per_modality.empty());
}

TEST_CASE("paper-shaped partition: 5534 + 7344 = 12878") {
  std::vector<ReportRef> all;
  std::vector<ReportRef> recs;
  all.reserve(12878 * 2);
  for (int i = 0; i < 12878; ++i) {
    std::string pid = "P" + std::to_string(i);
    ReportRef r = ref("R" + std::to_string(i), pid, Modality::Angiography, "2010-01-01");
    all.push_back(r);
    recs.push_back(r);
    if (i < 7344) {
      all.push_back(ref("F" + std::to_string(i), pid, Modality::Angiography, "2011-01-01"));
    }
  }
  auto timelines = adherence::build_timelines(all);
  auto counts = adherence::analyze_same_modality(timelines, recs);
  CHECK(counts.at(Modality::Angiography).with_followup == 7344);
  CHECK(counts.at(Modality::Angiography).without_followup == 5534);
  CHECK(counts.at(Modality::Angiography).total() == 12878);
}

TEST_CASE("csv output carries counts and two-decimal shares") {
  std::map<Modality, adherence::SameModalityCounts> counts;
  counts[Modality::Angiography] = {7344, 5534};
  std::string csv = adherence::same_modality_csv(counts);
  CHECK(csv.find("Angiography,12878,5534,0.43,7344,0.57\n") != std::string::npos);
}

// Randomized equivalence against the brute-force oracle; the acceptance suite
// runs the full-size version of this check.
TEST_CASE("analysis matches the brute-force oracle on random timelines") {
  Rng rng(4242);
  for (int iter = 0; iter < 150; ++iter) {
    std::vector<ReportRef> all;
    std::vector<testsupport::OracleReport> oracle_reports;
    std::vector<RecommendationReport> recs;
    std::vector<testsupport::OracleRec> oracle_recs;
    std::vector<ReportRef> rec_refs;
    std::vector<std::string> rec_ids;

    size_t patients = 1 + rng.index(4);
    size_t next_id = 0;
    for (size_t p = 0; p < patients; ++p) {
      std::string pid = "P" + std::to_string(p);
      size_t n = 1 + rng.index(6);
      for (size_t i = 0; i < n; ++i) {
        Date day{2010 + int(rng.index(7)), unsigned(1 + rng.index(12)),
                 unsigned(1 + rng.index(28))};
        ReportRef r{"R" + std::to_string(next_id++), pid, Modality(rng.index(10)),
                    timeutil::to_epoch(day, int(rng.index(24)))};
        all.push_back(r);
        oracle_reports.push_back({r.report_id, r.patient_id, r.modality, r.timestamp});
        if (rng.bernoulli(0.4)) {
          RecommendationReport rec;
          rec.report_id = r.report_id;
          testsupport::OracleRec orec;
          orec.report_id = r.report_id;
          size_t k = rng.index(3);  // 0..2 normalized timeframes
          for (size_t j = 0; j < k; ++j) {
            char unit = std::string("DWMY")[rng.index(4)];
            int n_hi = int(1 + rng.index(unit == 'Y' ? 3 : 14));
            rec.timeframes.push_back(tf(unit, n_hi, n_hi));
            orec.timeframes.emplace_back(unit, n_hi);
          }
          recs.push_back(rec);
          oracle_recs.push_back(orec);
          rec_refs.push_back(r);
          rec_ids.push_back(r.report_id);
        }
      }
    }

    Date dataset_end{2016 + int(rng.index(3)), unsigned(1 + rng.index(12)),
                     unsigned(1 + rng.index(28))};
    int grace = rng.bernoulli(0.3) ? int(rng.index(15)) : 0;

    auto timelines = adherence::build_timelines(all);
    auto got9 = adherence::analyze_same_modality(timelines, rec_refs);
    auto want9 = testsupport::oracle_same_modality(oracle_reports, rec_ids);
    for (Modality m : corpus::all_modalities()) {
      uint64_t gw = got9.count(m) ? got9.at(m).with_followup : 0;
      uint64_t gn = got9.count(m) ? got9.at(m).without_followup : 0;
      uint64_t ww = want9.with.count(m) ? want9.with.at(m) : 0;
      uint64_t wn = want9.without.count(m) ? want9.without.at(m) : 0;
      CHECK(gw == ww);
      CHECK(gn == wn);
    }

    auto got10 = adherence::analyze_timed(timelines, all, recs, dataset_end, grace);
    auto want10 = testsupport::oracle_timed(oracle_reports, oracle_recs, dataset_end, grace);
    for (Modality m : corpus::all_modalities()) {
      std::array<uint64_t, 4> got{};
      if (got10.per_modality.count(m)) {
        const auto& c = got10.per_modality.at(m);
        got = {c.no_followup, c.early, c.late, c.censored};
      }
      std::array<uint64_t, 4> want{};
      if (want10.counts.count(m)) want = want10.counts.at(m);
      CHECK(got == want);
    }
  }
}

TEST_CASE("extending dataset_end never increases censored count") {
  Rng rng(606);
  std::vector<ReportRef> all;
  std::vector<RecommendationReport> recs;
  for (size_t i = 0; i < 40; ++i) {
    Date day{2012 + int(rng.index(5)), unsigned(1 + rng.index(12)), unsigned(1 + rng.index(28))};
    ReportRef r{"R" + std::to_string(i), "P" + std::to_string(i % 10), Modality(rng.index(10)),
                timeutil::to_epoch(day, 9)};
    all.push_back(r);
    char unit = std::string("DWMY")[rng.index(4)];
    recs.push_back({r.report_id, {tf(unit, 1, int(1 + rng.index(10)))}});
  }
  auto timelines = adherence::build_timelines(all);
  uint64_t prev = UINT64_MAX;
  for (int year = 2013; year <= 2020; ++year) {
    auto analysis = adherence::analyze_timed(timelines, all, recs, Date{year, 1, 1}, 0);
    uint64_t censored = 0;
    for (const auto& [_, c] : analysis.per_modality) censored += c.censored;
    CHECK(censored <= prev);
    prev = censored;
  }
}

TEST_CASE("adding a later same-modality encounter never creates a no-followup") {
  std::vector<ReportRef> base = {ref("R1", "P1", Modality::CT, "2010-01-01")};
  auto t1 = adherence::build_timelines(base);
  auto a1 = adherence::analyze_timed(t1, base, {{"R1", {tf('M', 2, 2)}}}, Date{2018, 1, 1}, 0);
  CHECK(a1.records[0].report_outcome == Outcome::NoFollowup);

  std::vector<ReportRef> more = base;
  more.push_back(ref("R2", "P1", Modality::CT, "2010-02-15"));
  auto t2 = adherence::build_timelines(more);
  auto a2 = adherence::analyze_timed(t2, more, {{"R1", {tf('M', 2, 2)}}}, Date{2018, 1, 1}, 0);
  CHECK(a2.records[0].report_outcome == Outcome::Early);
}
