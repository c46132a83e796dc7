#include "radrec/eval.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "radrec/rng.hpp"

namespace radrec::eval {

Metrics confusion_to_metrics(const ConfusionCounts& c) {
  Metrics m;
  if (c.tp + c.fp == 0) {
    m.degenerate = true;
  } else {
    m.precision = double(c.tp) / double(c.tp + c.fp);
  }
  if (c.tp + c.fn == 0) {
    m.degenerate = true;
  } else {
    m.recall = double(c.tp) / double(c.tp + c.fn);
  }
  if (m.precision + m.recall > 0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  } else {
    m.degenerate = true;
  }
  return m;
}

// "B-test" -> "test", "O" -> "".
static std::string collapse_tag(const std::string& tag) {
  if (tag == "O") return "";
  size_t dash = tag.find('-');
  if (dash == std::string::npos) return tag;
  return tag.substr(dash + 1);
}

static std::map<std::string, ConfusionCounts> token_counts(
    const std::vector<std::string>& gold, const std::vector<std::string>& predicted) {
  if (gold.size() != predicted.size())
    throw std::invalid_argument("token_level_eval: gold and predicted lengths differ (" +
                                std::to_string(gold.size()) + " vs " +
                                std::to_string(predicted.size()) + ")");
  std::map<std::string, ConfusionCounts> counts;
  for (size_t i = 0; i < gold.size(); ++i) {
    std::string g = collapse_tag(gold[i]);
    std::string p = collapse_tag(predicted[i]);
    if (!g.empty() && g == p) {
      counts[g].tp++;
    } else {
      if (!p.empty()) counts[p].fp++;
      if (!g.empty()) counts[g].fn++;
    }
  }
  return counts;
}

std::map<std::string, Metrics> token_level_eval(const std::vector<std::string>& gold,
                                                const std::vector<std::string>& predicted) {
  std::map<std::string, Metrics> out;
  for (const auto& [type, c] : token_counts(gold, predicted)) out[type] = confusion_to_metrics(c);
  return out;
}

ConfusionCounts token_level_counts_pooled(const std::vector<std::string>& gold,
                                          const std::vector<std::string>& predicted) {
  ConfusionCounts pooled;
  for (const auto& [type, c] : token_counts(gold, predicted)) pooled += c;
  return pooled;
}

static std::map<std::string, Metrics> span_eval_impl(const std::vector<KeyedSpan>& gold,
                                                     const std::vector<KeyedSpan>& predicted,
                                                     bool split_by_type) {
  std::set<KeyedSpan> gold_set(gold.begin(), gold.end());
  std::set<KeyedSpan> pred_set(predicted.begin(), predicted.end());

  std::map<std::string, ConfusionCounts> counts;
  auto type_of = [&](const KeyedSpan& s) {
    return split_by_type ? corpus::entity_kind_name(s.kind) : std::string("all");
  };
  for (const KeyedSpan& g : gold_set) {
    if (pred_set.count(g)) {
      counts[type_of(g)].tp++;
    } else {
      counts[type_of(g)].fn++;
    }
  }
  for (const KeyedSpan& p : pred_set) {
    if (!gold_set.count(p)) counts[type_of(p)].fp++;
  }

  std::map<std::string, Metrics> out;
  for (const auto& [type, c] : counts) out[type] = confusion_to_metrics(c);
  return out;
}

std::map<std::string, Metrics> span_level_eval(const std::vector<KeyedSpan>& gold,
                                               const std::vector<KeyedSpan>& predicted) {
  return span_eval_impl(gold, predicted, true);
}

Metrics span_level_overall(const std::vector<KeyedSpan>& gold,
                           const std::vector<KeyedSpan>& predicted) {
  auto m = span_eval_impl(gold, predicted, false);
  if (m.empty()) {
    Metrics empty;
    empty.degenerate = true;
    return empty;
  }
  return m.at("all");
}

KappaResult cohens_kappa(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("cohens_kappa: need equal non-empty label lists");
  const double n = double(a.size());
  double agree = 0, a1 = 0, b1 = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) agree += 1;
    if (a[i]) a1 += 1;
    if (b[i]) b1 += 1;
  }
  double po = agree / n;
  double pe = (a1 / n) * (b1 / n) + ((n - a1) / n) * ((n - b1) / n);
  KappaResult r;
  if (pe >= 1.0) {
    r.degenerate = true;
    r.kappa = (agree == n) ? 1.0 : 0.0;
    return r;
  }
  r.kappa = (po - pe) / (1.0 - pe);
  return r;
}

Metrics pairwise_f1(const std::vector<KeyedSpan>& annotator_a,
                    const std::vector<KeyedSpan>& annotator_b) {
  std::set<KeyedSpan> a(annotator_a.begin(), annotator_a.end());
  std::set<KeyedSpan> b(annotator_b.begin(), annotator_b.end());
  ConfusionCounts c;
  for (const KeyedSpan& s : a) {
    if (b.count(s)) {
      c.tp++;
    } else {
      c.fn++;
    }
  }
  for (const KeyedSpan& s : b) {
    if (!a.count(s)) c.fp++;
  }
  return confusion_to_metrics(c);
}

std::vector<std::vector<std::string>> kfold_split(std::vector<std::string> report_ids, size_t k,
                                                  uint64_t seed) {
  if (k == 0) throw std::invalid_argument("kfold_split: k must be positive");
  if (k > report_ids.size())
    throw std::invalid_argument("kfold_split: k exceeds the number of reports");
  // Deterministic regardless of input order.
  std::sort(report_ids.begin(), report_ids.end());
  Rng rng(seed);
  rng.shuffle(report_ids);
  std::vector<std::vector<std::string>> folds(k);
  for (size_t i = 0; i < report_ids.size(); ++i) {
    folds[i % k].push_back(report_ids[i]);
  }
  return folds;
}

}  // namespace radrec::eval
