#include "radrec/synthetic.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "radrec/rng.hpp"
#include "radrec/temporal.hpp"
#include "radrec/utf8.hpp"

namespace radrec::synthetic {

using corpus::EntityKind;
using corpus::EntitySpan;
using corpus::Modality;
using timeutil::Date;

namespace {

const std::vector<std::string>& filler_sentences() {
  static const std::vector<std::string> fillers = {
      "No acute abnormality is identified.",
      "The lungs are clear bilaterally.",
      "Size consistent with dates.",
      "There is no evidence of acute fracture.",
      "The visualized organs are unremarkable.",
      "Mild degenerative changes are present.",
      "Heart size is within normal limits.",
      "No pleural effusion or pneumothorax.",
      "Bones are intact without focal lesion.",
      "Dr. Smith was notified of these results.",
      "Small hypodensity measuring 3.5 cm is again seen.",
      "Comparison was made with the prior examination.",
      "A small ovoid mass (±2 cm) is noted adjacent to the hilum.",
      "Anatomic survey limited by patient habitus.",
      "The remaining structures are stable in appearance.",
      "Surgical clips are present in the right upper quadrant.",
  };
  return fillers;
}

const std::vector<std::string>& test_phrases() {
  static const std::vector<std::string> tests = {
      "ultrasound",       "chest CT",           "MRI",
      "repeat radiograph", "mammogram",         "PET scan",
      "CT scan of the chest", "dedicated MRI",  "four phase CT",
      "fetal echo",
  };
  return tests;
}

const std::vector<std::string>& reason_phrases() {
  static const std::vector<std::string> reasons = {
      "fetal growth",
      "possible recurrence of lymphoma",
      "this lesion",
      "interval change",
      "the renal cyst",
      "a pulmonary nodule",
      "right lower lobe opacity",
      "the adnexal finding",
  };
  return reasons;
}

// Surfaces paired with nothing: all of these normalize successfully.
const std::vector<std::string>& parseable_times() {
  static const std::vector<std::string> times = {
      "2 weeks",  "3 weeks",  "4 weeks",   "4-5 weeks", "6 weeks",  "1 month",
      "2 months", "3 months", "6 months",  "6 to 12 months", "12 months",
      "1 year",   "one year", "two weeks", "2 years",   "3 mos",    "6 wks", "1 yr",
  };
  return times;
}

const std::vector<std::string>& unparseable_times() {
  static const std::vector<std::string> times = {
      "second trimester", "the next visit", "several weeks", "short interval", "a few days",
  };
  return times;
}

enum class Slot { Lit, Test, Time, Reason };

struct Piece {
  Slot slot;
  const char* lit = nullptr;
};

using Template = std::vector<Piece>;

// Keyed by (has_test, has_time, has_reason).
const std::vector<Template>& templates_for(bool has_test, bool has_time, bool has_reason) {
  static const std::vector<Template> ttt = {
      {{Slot::Lit, "Recommend repeat "}, {Slot::Test}, {Slot::Lit, " in "}, {Slot::Time},
       {Slot::Lit, " to evaluate "}, {Slot::Reason}, {Slot::Lit, "."}},
      {{Slot::Lit, "Follow-up "}, {Slot::Test}, {Slot::Lit, " is suggested in "}, {Slot::Time},
       {Slot::Lit, " to exclude "}, {Slot::Reason}, {Slot::Lit, "."}},
      {{Slot::Lit, "Given these findings, "}, {Slot::Test}, {Slot::Lit, " is recommended in "},
       {Slot::Time}, {Slot::Lit, " for "}, {Slot::Reason}, {Slot::Lit, "."}},
  };
  static const std::vector<Template> ttf = {
      {{Slot::Lit, "Would recommend "}, {Slot::Test}, {Slot::Lit, " in "}, {Slot::Time},
       {Slot::Lit, "."}},
      {{Slot::Lit, "Repeat "}, {Slot::Test}, {Slot::Lit, " in "}, {Slot::Time},
       {Slot::Lit, " is advised."}},
  };
  static const std::vector<Template> tft = {
      {{Slot::Lit, "Further evaluation with "}, {Slot::Test}, {Slot::Lit, " is advised for "},
       {Slot::Reason}, {Slot::Lit, "."}},
      {{Slot::Lit, "Follow-up "}, {Slot::Test}, {Slot::Lit, " is suggested to exclude "},
       {Slot::Reason}, {Slot::Lit, "."}},
  };
  static const std::vector<Template> tff = {
      {{Slot::Lit, "Follow-up "}, {Slot::Test}, {Slot::Lit, " is recommended."}},
      {{Slot::Lit, "Correlation with "}, {Slot::Test}, {Slot::Lit, " is advised."}},
  };
  static const std::vector<Template> ftt = {
      {{Slot::Lit, "Follow-up in "}, {Slot::Time}, {Slot::Lit, " is recommended for "},
       {Slot::Reason}, {Slot::Lit, "."}},
  };
  static const std::vector<Template> ftf = {
      {{Slot::Lit, "Normal interval follow-up is recommended in "}, {Slot::Time},
       {Slot::Lit, "."}},
      {{Slot::Lit, "Follow-up is suggested in "}, {Slot::Time}, {Slot::Lit, "."}},
  };
  static const std::vector<Template> fft = {
      {{Slot::Lit, "Clinical follow-up is advised for "}, {Slot::Reason}, {Slot::Lit, "."}},
  };
  static const std::vector<Template> fff = {
      {{Slot::Lit, "Follow-up as clinically indicated is recommended."}},
      {{Slot::Lit, "Close clinical follow-up is advised."}},
  };
  if (has_test && has_time && has_reason) return ttt;
  if (has_test && has_time) return ttf;
  if (has_test && has_reason) return tft;
  if (has_test) return tff;
  if (has_time && has_reason) return ftt;
  if (has_time) return ftf;
  if (has_reason) return fft;
  return fff;
}

// Special annual screening phrasing; time frame entity is the word "Annual".
const Template& annual_template() {
  static const Template t = {
      {Slot::Time, "Annual"}, {Slot::Lit, " screening "}, {Slot::Test},
      {Slot::Lit, " is recommended."}};
  return t;
}

struct Assembler {
  std::string text;
  size_t chars = 0;

  size_t append(const std::string& s) {
    text += s;
    chars += utf8::length(s);
    return chars;
  }
};

struct RecSentencePlan {
  Template tpl;
  std::string test, time, reason;
  std::optional<temporal::NormalizedTimeFrame> parsed_time;
};

struct SlotPlan {
  size_t n_sentences = 0;
  std::vector<RecSentencePlan> recs;  // empty for fillers
  Modality modality = Modality::CT;
  Date day{};
  // for rec reports
  std::optional<adherence::Outcome> target;
  std::optional<Date> encounter_day;
};

std::map<Modality, double> default_mix() {
  using M = Modality;
  return {
      {M::CT, 0.25},       {M::Ultrasound, 0.18}, {M::XRay, 0.22}, {M::Mammogram, 0.10},
      {M::MRI, 0.10},      {M::PortableRadiography, 0.06}, {M::NuclearMedicine, 0.04},
      {M::Angiography, 0.03}, {M::PET, 0.01},     {M::Fluoroscopy, 0.01},
  };
}

Modality sample_modality(const std::map<Modality, double>& mix, Rng& rng,
                         const std::vector<Modality>* allowed) {
  double total = 0.0;
  for (const auto& [m, w] : mix) {
    if (allowed && std::find(allowed->begin(), allowed->end(), m) == allowed->end()) continue;
    total += w;
  }
  if (total <= 0.0) {
    // fall back to a uniform draw over the allowed set
    if (allowed && !allowed->empty()) return (*allowed)[rng.index(allowed->size())];
    return Modality::CT;
  }
  double x = rng.uniform() * total;
  for (const auto& [m, w] : mix) {
    if (allowed && std::find(allowed->begin(), allowed->end(), m) == allowed->end()) continue;
    x -= w;
    if (x <= 0.0) return m;
  }
  return allowed && !allowed->empty() ? allowed->back() : Modality::CT;
}

size_t binomial(size_t n, double p, Rng& rng) {
  size_t k = 0;
  for (size_t i = 0; i < n; ++i) {
    if (rng.bernoulli(p)) ++k;
  }
  return k;
}

void validate(const Config& cfg) {
  auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (cfg.n_reports < 1) throw std::invalid_argument("n_reports must be >= 1");
  if (cfg.patients < 1) throw std::invalid_argument("patients must be >= 1");
  if (!in01(cfg.positive_rate)) throw std::invalid_argument("positive_rate must be in [0,1]");
  if (!in01(cfg.timeframe_rate) || !in01(cfg.unparseable_rate) || !in01(cfg.test_rate) ||
      !in01(cfg.reason_rate) || !in01(cfg.header_rate))
    throw std::invalid_argument("rates must be in [0,1]");
  if (cfg.p_no_followup < 0 || cfg.p_early < 0 || cfg.p_late < 0 || cfg.p_censored < 0 ||
      cfg.p_no_followup + cfg.p_early + cfg.p_late + cfg.p_censored <= 0)
    throw std::invalid_argument("adherence profile weights must be non-negative and not all zero");
  if (cfg.sentences_per_report < 2) throw std::invalid_argument("sentences_per_report must be >= 2");
  if (!(cfg.window_start < cfg.window_end)) throw std::invalid_argument("empty date window");
  // The timed-outcome construction needs headroom for the longest pooled
  // duration (2 years) plus the late-encounter allowance.
  if (timeutil::days_between(cfg.window_start, cfg.window_end) < 1300)
    throw std::invalid_argument("date window must span at least 1300 days");
  if (cfg.institutions.empty()) throw std::invalid_argument("need at least one institution");
}

}  // namespace

Corpus generate(const Config& cfg, uint64_t seed) {
  validate(cfg);
  const std::map<Modality, double> mix = cfg.modality_mix.empty() ? default_mix() : cfg.modality_mix;
  Rng rng(seed);

  Corpus out;
  out.dataset_end = cfg.window_end;

  size_t budget = cfg.n_reports;
  size_t next_report = 0;
  const int64_t window_days = timeutil::days_between(cfg.window_start, cfg.window_end);

  auto next_report_id = [&] {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "R%06zu", next_report++);
    return std::string(buf);
  };

  auto sentence_count = [&] {
    double n = cfg.sentences_per_report * rng.uniform(0.8, 1.2);
    return std::max<size_t>(2, size_t(std::llround(n)));
  };

  auto make_report = [&](const std::string& patient, Modality modality, const Date& day,
                         const std::vector<RecSentencePlan>& recs, size_t n_sentences) {
    corpus::Report r;
    r.report_id = next_report_id();
    r.patient_id = patient;
    r.institution = cfg.institutions[rng.index(cfg.institutions.size())];
    r.modality = modality;
    int hour = 8 + int(rng.index(9));
    int minute = int(rng.index(60));
    r.timestamp = timeutil::to_epoch(day, hour, minute, 0);

    GoldReport gold;
    Assembler a;

    size_t n = std::max<size_t>(n_sentences, recs.size());
    std::vector<int> rec_at(n, -1);
    {
      // spread rec sentences over distinct positions
      std::vector<size_t> perm = rng.permutation(n);
      for (size_t i = 0; i < recs.size(); ++i) rec_at[perm[i]] = int(i);
    }

    bool leading_header = rng.bernoulli(cfg.header_rate);
    bool mid_header = n >= 6 && rng.bernoulli(cfg.header_rate);
    size_t mid_at = n / 2;

    if (leading_header) a.append("FINDINGS:\n");
    for (size_t s = 0; s < n; ++s) {
      if (mid_header && s == mid_at) {
        if (!a.text.empty() && a.text.back() != '\n') a.append("\n");
        a.append("IMPRESSION:\n");
      }
      size_t begin = a.chars;
      if (rec_at[s] >= 0) {
        const RecSentencePlan& plan = recs[size_t(rec_at[s])];
        for (const Piece& piece : plan.tpl) {
          const std::string* payload = nullptr;
          EntityKind kind = EntityKind::Test;
          switch (piece.slot) {
            case Slot::Lit:
              a.append(piece.lit);
              break;
            case Slot::Test:
              payload = &plan.test;
              kind = EntityKind::Test;
              break;
            case Slot::Time:
              payload = &plan.time;
              kind = EntityKind::Timeframe;
              break;
            case Slot::Reason:
              payload = &plan.reason;
              kind = EntityKind::Reason;
              break;
          }
          if (payload) {
            size_t b = a.chars;
            size_t e = a.append(*payload);
            gold.annotated.entities.push_back(EntitySpan{kind, b, e, *payload});
          }
        }
        gold.annotated.rec_sentence_spans.push_back({begin, a.chars});
      } else {
        a.append(filler_sentences()[rng.index(filler_sentences().size())]);
      }
      if (s + 1 < n) a.append(rng.bernoulli(0.2) ? "\n" : " ");
    }

    r.text = std::move(a.text);
    gold.annotated.report = std::move(r);
    gold.has_recommendation = !recs.empty();
    return gold;
  };

  // Sentinel report pins the corpus maximum timestamp to the window end so
  // the analyzer default dataset_end matches the generator's.
  {
    Date end = cfg.window_end;
    GoldReport sentinel = make_report("P_SENTINEL", sample_modality(mix, rng, nullptr), end, {},
                                      sentence_count());
    out.reports.push_back(std::move(sentinel));
    --budget;
  }

  const double avg_slots = std::max(1.0, double(cfg.n_reports) / double(cfg.patients));
  size_t patient_no = 0;

  while (budget > 0) {
    char pid[16];
    std::snprintf(pid, sizeof(pid), "P%05zu", patient_no++);
    const std::string patient = pid;

    size_t want = std::max<size_t>(1, size_t(std::llround(avg_slots * rng.uniform(0.5, 1.5))));
    want = std::min(want, budget);

    std::vector<Modality> claimed;
    std::vector<SlotPlan> slots;

    for (size_t s = 0; s < want && budget > 0; ++s) {
      SlotPlan slot;
      slot.n_sentences = sentence_count();

      size_t k = binomial(slot.n_sentences, cfg.positive_rate, rng);
      std::vector<Modality> unclaimed;
      for (Modality m : corpus::all_modalities()) {
        if (std::find(claimed.begin(), claimed.end(), m) == claimed.end())
          unclaimed.push_back(m);
      }
      if (k > 0 && !unclaimed.empty()) {
        slot.modality = sample_modality(mix, rng, &unclaimed);
        claimed.push_back(slot.modality);

        for (size_t i = 0; i < k; ++i) {
          RecSentencePlan plan;
          bool has_time = rng.bernoulli(cfg.timeframe_rate);
          bool has_test = rng.bernoulli(cfg.test_rate);
          bool has_reason = rng.bernoulli(cfg.reason_rate);
          bool annual = has_time && has_test && !has_reason && rng.bernoulli(0.1);
          if (annual) {
            plan.tpl = annual_template();
            plan.time = "Annual";
            plan.test = test_phrases()[rng.index(test_phrases().size())];
          } else {
            const auto& pool = templates_for(has_test, has_time, has_reason);
            plan.tpl = pool[rng.index(pool.size())];
            if (has_test) plan.test = test_phrases()[rng.index(test_phrases().size())];
            if (has_reason) plan.reason = reason_phrases()[rng.index(reason_phrases().size())];
            if (has_time) {
              if (rng.bernoulli(cfg.unparseable_rate)) {
                plan.time = unparseable_times()[rng.index(unparseable_times().size())];
              } else {
                plan.time = parseable_times()[rng.index(parseable_times().size())];
              }
            }
          }
          if (!plan.time.empty()) {
            auto parsed = temporal::parse_timeframe(plan.time);
            if (parsed.ok()) plan.parsed_time = *parsed.value;
          }
          slot.recs.push_back(std::move(plan));
        }

        // Sample the report-level outcome target.
        double weights[4] = {cfg.p_no_followup, cfg.p_early, cfg.p_late, cfg.p_censored};
        double total = weights[0] + weights[1] + weights[2] + weights[3];
        double x = rng.uniform() * total;
        adherence::Outcome target = adherence::Outcome::NoFollowup;
        if ((x -= weights[0]) > 0) {
          if ((x -= weights[1]) <= 0) target = adherence::Outcome::Early;
          else if ((x -= weights[2]) <= 0) target = adherence::Outcome::Late;
          else target = adherence::Outcome::Censored;
        }

        bool needs_encounter =
            target == adherence::Outcome::Early || target == adherence::Outcome::Late;
        if (needs_encounter && budget < 2) {
          // Not enough budget left for the follow-up encounter; emit a filler
          // instead so every recommendation report honors its target.
          slot.recs.clear();
          claimed.pop_back();
          slot.day = timeutil::add_days(cfg.window_start, rng.range(0, window_days));
          slots.push_back(std::move(slot));
          --budget;
          continue;
        }
        slot.target = target;

        std::vector<temporal::NormalizedTimeFrame> timed;
        for (const auto& plan : slot.recs) {
          if (plan.parsed_time) timed.push_back(*plan.parsed_time);
        }

        if (timed.empty()) {
          // Untimed recommendation report: the target only decides whether a
          // later same-modality encounter exists.
          int64_t day_off = rng.range(0, std::max<int64_t>(1, window_days - 2));
          slot.day = timeutil::add_days(cfg.window_start, day_off);
          if (needs_encounter) {
            int64_t head = timeutil::days_between(slot.day, cfg.window_end);
            int64_t delta = rng.range(1, std::max<int64_t>(1, std::min<int64_t>(180, head)));
            slot.encounter_day = timeutil::add_days(slot.day, delta);
          }
        } else if (target == adherence::Outcome::Censored) {
          Date day = timeutil::add_days(cfg.window_end, -rng.range(0, 20));
          auto all_censored = [&](const Date& d) {
            for (const auto& tf : timed) {
              if (!(temporal::project_date(d, tf) > cfg.window_end)) return false;
            }
            return true;
          };
          while (!all_censored(day) && day < cfg.window_end) day = timeutil::add_days(day, 1);
          slot.day = day;
        } else {
          int64_t max_dur = 0;
          for (const auto& tf : timed)
            max_dur = std::max(max_dur, tf.hi_ordering_days());
          int64_t margin = int64_t(double(max_dur) * 1.1) + 130;
          int64_t latest = std::max<int64_t>(1, window_days - margin);
          Date day = timeutil::add_days(cfg.window_start, rng.range(0, latest));
          // Verify every projection leaves room for a late encounter.
          for (int guard = 0; guard < 64; ++guard) {
            Date worst{};
            bool ok = true;
            for (const auto& tf : timed) {
              Date p = temporal::project_date(day, tf);
              if (timeutil::days_between(p, cfg.window_end) < 95) {
                ok = false;
                if (p > worst) worst = p;
              }
            }
            if (ok) break;
            day = timeutil::add_days(day, -(timeutil::days_between(cfg.window_end, worst) + 95));
            if (day < cfg.window_start) {
              day = cfg.window_start;
              break;
            }
          }
          slot.day = day;

          Date min_proj = temporal::project_date(day, timed[0]);
          for (const auto& tf : timed) {
            Date p = temporal::project_date(day, tf);
            if (p < min_proj) min_proj = p;
          }
          if (target == adherence::Outcome::Early) {
            int64_t room = timeutil::days_between(slot.day, min_proj);
            int64_t delta = rng.bernoulli(0.2) ? room : rng.range(1, std::max<int64_t>(1, room));
            slot.encounter_day = timeutil::add_days(slot.day, std::max<int64_t>(1, delta));
          } else if (target == adherence::Outcome::Late) {
            slot.encounter_day = timeutil::add_days(min_proj, rng.range(1, 90));
          }
        }
        slots.push_back(std::move(slot));
        --budget;
        if (slots.back().encounter_day) --budget;
      } else {
        slot.recs.clear();
        slot.modality = Modality::CT;  // assigned in the filler pass below
        int64_t day_off = rng.range(0, window_days);
        slot.day = timeutil::add_days(cfg.window_start, day_off);
        slot.target.reset();
        slots.push_back(std::move(slot));
        --budget;
      }
    }

    // Filler modalities avoid every modality claimed by this patient's
    // recommendation reports, at any time, so constructed outcomes hold.
    std::vector<Modality> filler_pool;
    for (Modality m : corpus::all_modalities()) {
      if (std::find(claimed.begin(), claimed.end(), m) == claimed.end())
        filler_pool.push_back(m);
    }

    for (SlotPlan& slot : slots) {
      if (slot.recs.empty()) {
        slot.modality = filler_pool.empty() ? Modality::CT
                                            : sample_modality(mix, rng, &filler_pool);
        GoldReport g = make_report(patient, slot.modality, slot.day, {}, slot.n_sentences);
        out.reports.push_back(std::move(g));
        continue;
      }

      GoldReport g = make_report(patient, slot.modality, slot.day, slot.recs, slot.n_sentences);
      size_t timed = 0;
      for (const auto& plan : slot.recs) {
        if (plan.parsed_time) ++timed;
      }
      g.timed_recommendations = timed;
      if (timed > 0) g.timed_outcome = slot.target;
      g.followed = slot.encounter_day.has_value();
      out.reports.push_back(std::move(g));

      if (slot.encounter_day) {
        GoldReport enc =
            make_report(patient, slot.modality, *slot.encounter_day, {}, sentence_count());
        out.reports.push_back(std::move(enc));
      }
    }
  }

  return out;
}

std::map<Modality, adherence::SameModalityCounts> gold_same_modality(const Corpus& c) {
  std::map<Modality, adherence::SameModalityCounts> counts;
  for (const GoldReport& g : c.reports) {
    if (!g.has_recommendation) continue;
    auto& bucket = counts[g.annotated.report.modality];
    if (g.followed) {
      bucket.with_followup++;
    } else {
      bucket.without_followup++;
    }
  }
  return counts;
}

std::map<Modality, adherence::TimedCounts> gold_timed(const Corpus& c) {
  std::map<Modality, adherence::TimedCounts> counts;
  for (const GoldReport& g : c.reports) {
    if (!g.timed_outcome) continue;
    auto& bucket = counts[g.annotated.report.modality];
    switch (*g.timed_outcome) {
      case adherence::Outcome::NoFollowup: bucket.no_followup++; break;
      case adherence::Outcome::Early: bucket.early++; break;
      case adherence::Outcome::Late: bucket.late++; break;
      case adherence::Outcome::Censored: bucket.censored++; break;
    }
  }
  return counts;
}

std::string gold_outcomes_csv(const Corpus& c) {
  std::ostringstream out;
  out << "report_id,patient_id,modality,has_recommendation,followed,timed_outcome,"
         "timed_recommendations\n";
  for (const GoldReport& g : c.reports) {
    const corpus::Report& r = g.annotated.report;
    out << r.report_id << ',' << r.patient_id << ',' << corpus::modality_name(r.modality) << ','
        << (g.has_recommendation ? 1 : 0) << ',' << (g.followed ? 1 : 0) << ','
        << (g.timed_outcome ? adherence::outcome_name(*g.timed_outcome) : "none") << ','
        << g.timed_recommendations << '\n';
  }
  return out.str();
}

}  // namespace radrec::synthetic
