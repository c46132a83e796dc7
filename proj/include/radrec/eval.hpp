#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "radrec/corpus.hpp"

namespace radrec::eval {

struct ConfusionCounts {
  uint64_t tp = 0;
  uint64_t tn = 0;
  uint64_t fp = 0;
  uint64_t fn = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Set when a zero denominator forced a 0; batch evaluation never aborts.
  bool degenerate = false;
};

// P = tp/(tp+fp), R = tp/(tp+fn), F1 = harmonic mean.
Metrics confusion_to_metrics(const ConfusionCounts& c);

// Token-level evaluation with BIOES collapsed to entity type per token; O is
// not a positive class. Both tag sequences must be aligned 1:1.
// Tags are strings ("O", "B-test", ...). Throws on length mismatch.
std::map<std::string, Metrics> token_level_eval(const std::vector<std::string>& gold,
                                                const std::vector<std::string>& predicted);

// Pooled counts across types for micro-averaging.
ConfusionCounts token_level_counts_pooled(const std::vector<std::string>& gold,
                                          const std::vector<std::string>& predicted);

// A span identified within a specific report; exact-match evaluation key.
struct KeyedSpan {
  std::string report_id;
  corpus::EntityKind kind;
  size_t begin = 0;
  size_t end = 0;

  auto operator<=>(const KeyedSpan&) const = default;
};

// Exact (kind, begin, end) matching per type.
std::map<std::string, Metrics> span_level_eval(const std::vector<KeyedSpan>& gold,
                                               const std::vector<KeyedSpan>& predicted);
Metrics span_level_overall(const std::vector<KeyedSpan>& gold,
                           const std::vector<KeyedSpan>& predicted);

// Cohen's kappa for aligned binary label lists. Degenerate marginals
// (p_e == 1) come back as 1.0 when the lists agree everywhere, else 0.0.
struct KappaResult {
  double kappa = 0.0;
  bool degenerate = false;
};
KappaResult cohens_kappa(const std::vector<int>& labels_a, const std::vector<int>& labels_b);

// Inter-annotator F1 with annotator A as gold, exact span matching.
Metrics pairwise_f1(const std::vector<KeyedSpan>& annotator_a,
                    const std::vector<KeyedSpan>& annotator_b);

// Report-level k-fold assignment; fold sizes differ by at most one,
// deterministic in (ids, k, seed). Throws if k > |ids| or k == 0.
std::vector<std::vector<std::string>> kfold_split(std::vector<std::string> report_ids, size_t k,
                                                  uint64_t seed);

}  // namespace radrec::eval
