#include "radrec/pipeline.hpp"

#include <nlohmann/json.hpp>

namespace radrec::pipeline {

using nlohmann::json;

han::ReportExample to_han_example(const corpus::AnnotatedReport& annotated,
                                  const text::Segmenter& segmenter) {
  han::ReportExample ex;
  ex.report_id = annotated.report.report_id;
  auto sentences = text::segment_report(annotated.report, segmenter);
  for (const text::Sentence& s : sentences) {
    std::vector<std::string> norms;
    norms.reserve(s.tokens.size());
    for (const text::Token& t : s.tokens) norms.push_back(t.norm);
    ex.sentences.push_back(std::move(norms));

    bool positive = false;
    for (const corpus::CharRange& r : annotated.rec_sentence_spans) {
      if (s.begin < r.end && s.end > r.begin) {
        positive = true;
        break;
      }
    }
    ex.labels.push_back(positive ? 1 : 0);
  }
  return ex;
}

std::vector<ner::SentenceExample> to_ner_sentences(const corpus::AnnotatedReport& annotated) {
  std::vector<ner::SentenceExample> out;
  for (const corpus::CharRange& span : annotated.rec_sentence_spans) {
    ner::SentenceExample ex;
    ex.report_id = annotated.report.report_id;
    ex.tokens = text::tokenize(annotated.report.text, span.begin, span.end);
    if (ex.tokens.empty()) continue;

    std::vector<corpus::EntitySpan> inside;
    for (const corpus::EntitySpan& e : annotated.entities) {
      if (e.begin >= span.begin && e.end <= span.end) inside.push_back(e);
    }
    ex.gold = ner::encode_tags(inside, ex.tokens);
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<std::vector<std::string>> to_token_stream(const corpus::Report& report,
                                                      const text::Segmenter& segmenter) {
  std::vector<std::vector<std::string>> out;
  for (const text::Sentence& s : text::segment_report(report, segmenter)) {
    std::vector<std::string> norms;
    norms.reserve(s.tokens.size());
    for (const text::Token& t : s.tokens) norms.push_back(t.norm);
    out.push_back(std::move(norms));
  }
  return out;
}

Extraction extract_report(const corpus::Report& report, const text::Segmenter& segmenter,
                          const han::HanModel& sentence_model, const ner::NerModel& ner_model) {
  Extraction out;
  out.report_id = report.report_id;

  auto sentences = text::segment_report(report, segmenter);
  if (sentences.empty()) return out;

  std::vector<std::vector<std::string>> norms(sentences.size());
  for (size_t i = 0; i < sentences.size(); ++i) {
    for (const text::Token& t : sentences[i].tokens) norms[i].push_back(t.norm);
  }

  auto preds = sentence_model.classify_report(norms);
  for (size_t i = 0; i < sentences.size(); ++i) {
    out.sentences.push_back(SentenceOut{i, sentences[i].begin, sentences[i].end,
                                        preds[i].probability, preds[i].positive});
  }

  for (size_t i = 0; i < sentences.size(); ++i) {
    if (!preds[i].positive || sentences[i].tokens.empty()) continue;
    auto tags = ner_model.tag_sentence(sentences[i].tokens);
    auto spans = ner::decode_spans(tags, sentences[i].tokens, report.text);
    for (corpus::EntitySpan& span : spans) {
      if (span.kind == corpus::EntityKind::Timeframe) {
        TimeframeOut tf;
        tf.begin = span.begin;
        tf.end = span.end;
        tf.text = span.text;
        tf.sentence = i;
        auto parsed = temporal::parse_timeframe(span.text);
        if (parsed.ok()) {
          tf.normalized = *parsed.value;
        } else {
          tf.failure = *parsed.failure;
        }
        out.timeframes.push_back(std::move(tf));
      }
      out.entities.push_back(EntityOut{std::move(span), i});
    }
  }
  return out;
}

std::string extraction_to_json_line(const Extraction& e) {
  json j;
  j["report_id"] = e.report_id;
  j["n_sentences"] = e.sentences.size();
  json sentences = json::array();
  for (const SentenceOut& s : e.sentences) {
    sentences.push_back({{"index", s.index},
                         {"begin", s.begin},
                         {"end", s.end},
                         {"p", s.probability},
                         {"positive", s.positive}});
  }
  j["sentences"] = std::move(sentences);
  json entities = json::array();
  for (const EntityOut& ent : e.entities) {
    entities.push_back({{"kind", corpus::entity_kind_name(ent.span.kind)},
                        {"begin", ent.span.begin},
                        {"end", ent.span.end},
                        {"text", ent.span.text},
                        {"sentence", ent.sentence}});
  }
  j["entities"] = std::move(entities);
  json timeframes = json::array();
  for (const TimeframeOut& tf : e.timeframes) {
    json t = {{"begin", tf.begin},
              {"end", tf.end},
              {"text", tf.text},
              {"sentence", tf.sentence}};
    if (tf.normalized) {
      t["status"] = "ok";
      t["lo"] = tf.normalized->lo();
      t["hi"] = tf.normalized->hi();
    } else {
      t["status"] = temporal::failure_code_name(*tf.failure);
    }
    timeframes.push_back(std::move(t));
  }
  j["timeframes"] = std::move(timeframes);
  return j.dump();
}

Extraction extraction_from_json_line(const std::string& line, size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& ex) {
    throw corpus::RecordError(line_no, std::string("malformed prediction record: ") + ex.what());
  }
  Extraction e;
  try {
    e.report_id = j.at("report_id").get<std::string>();
    for (const json& s : j.at("sentences")) {
      e.sentences.push_back(SentenceOut{s.at("index").get<size_t>(), s.at("begin").get<size_t>(),
                                        s.at("end").get<size_t>(), s.at("p").get<double>(),
                                        s.at("positive").get<bool>()});
    }
    for (const json& ent : j.at("entities")) {
      auto kind = corpus::entity_kind_from_string(ent.at("kind").get<std::string>());
      if (!kind) throw corpus::RecordError(line_no, "unknown entity kind");
      EntityOut out;
      out.span = corpus::EntitySpan{*kind, ent.at("begin").get<size_t>(),
                                    ent.at("end").get<size_t>(), ent.at("text").get<std::string>()};
      out.sentence = ent.at("sentence").get<size_t>();
      e.entities.push_back(std::move(out));
    }
    for (const json& t : j.at("timeframes")) {
      TimeframeOut tf;
      tf.begin = t.at("begin").get<size_t>();
      tf.end = t.at("end").get<size_t>();
      tf.text = t.at("text").get<std::string>();
      tf.sentence = t.at("sentence").get<size_t>();
      std::string status = t.at("status").get<std::string>();
      if (status == "ok") {
        auto lo = temporal::parse_iso_duration(t.at("lo").get<std::string>());
        auto hi = temporal::parse_iso_duration(t.at("hi").get<std::string>());
        if (!lo || !hi)
          throw corpus::RecordError(line_no, "bad normalized duration in prediction record");
        temporal::NormalizedTimeFrame tfv;
        tfv.raw = tf.text;
        tfv.unit = hi->unit;
        tfv.lo_magnitude = lo->lo_magnitude;
        tfv.hi_magnitude = hi->hi_magnitude;
        tfv.is_range = tfv.lo_magnitude != tfv.hi_magnitude;
        tf.normalized = tfv;
      } else {
        for (temporal::ParseFailure f :
             {temporal::ParseFailure::UnsupportedPhrase, temporal::ParseFailure::NoNumber,
              temporal::ParseFailure::NoUnit, temporal::ParseFailure::InvertedRange}) {
          if (temporal::failure_code_name(f) == status) tf.failure = f;
        }
        if (!tf.failure) throw corpus::RecordError(line_no, "unknown failure code " + status);
      }
      e.timeframes.push_back(std::move(tf));
    }
  } catch (const json::exception& ex) {
    throw corpus::RecordError(line_no, std::string("bad prediction record: ") + ex.what());
  }
  return e;
}

}  // namespace radrec::pipeline
