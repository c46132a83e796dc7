#pragma once

#include <optional>
#include <string>
#include <vector>

#include "radrec/corpus.hpp"
#include "radrec/han.hpp"
#include "radrec/ner.hpp"
#include "radrec/temporal.hpp"
#include "radrec/text.hpp"

namespace radrec::pipeline {

// Sentence labels come from overlap with the gold recommendation spans; the
// generator's sentences segment exactly, so overlap equals equality there.
han::ReportExample to_han_example(const corpus::AnnotatedReport& annotated,
                                  const text::Segmenter& segmenter);

// Gold recommendation sentences with BIOES tags for the tagger.
std::vector<ner::SentenceExample> to_ner_sentences(const corpus::AnnotatedReport& annotated);

// Token norms per sentence, feeding embedding pretraining.
std::vector<std::vector<std::string>> to_token_stream(const corpus::Report& report,
                                                      const text::Segmenter& segmenter);

struct SentenceOut {
  size_t index = 0;
  size_t begin = 0;
  size_t end = 0;
  double probability = 0.0;
  bool positive = false;
};

struct TimeframeOut {
  size_t begin = 0;
  size_t end = 0;
  std::string text;
  size_t sentence = 0;
  std::optional<temporal::NormalizedTimeFrame> normalized;
  std::optional<temporal::ParseFailure> failure;
};

struct EntityOut {
  corpus::EntitySpan span;
  size_t sentence = 0;
};

struct Extraction {
  std::string report_id;
  std::vector<SentenceOut> sentences;
  std::vector<EntityOut> entities;
  std::vector<TimeframeOut> timeframes;
};

// Full per-report extraction: segment, classify, tag positive sentences,
// normalize time frame entities.
Extraction extract_report(const corpus::Report& report, const text::Segmenter& segmenter,
                          const han::HanModel& sentence_model, const ner::NerModel& ner_model);

std::string extraction_to_json_line(const Extraction& e);
Extraction extraction_from_json_line(const std::string& line, size_t line_no);

}  // namespace radrec::pipeline
