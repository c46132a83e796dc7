// Batch pipeline driver: generate / train-embeddings / train-sentence /
// train-ner / extract / analyze / evaluate. Every command is deterministic
// given config + seed and writes a manifest of output content hashes.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "radrec/adherence.hpp"
#include "radrec/corpus.hpp"
#include "radrec/embed.hpp"
#include "radrec/eval.hpp"
#include "radrec/han.hpp"
#include "radrec/hash.hpp"
#include "radrec/ner.hpp"
#include "radrec/pipeline.hpp"
#include "radrec/synthetic.hpp"
#include "radrec/temporal.hpp"
#include "radrec/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace radrec;

namespace {

// Fixed exit codes for scripting.
constexpr int kOk = 0;
constexpr int kGenericError = 1;
constexpr int kConfigError = 2;
constexpr int kDegenerateData = 3;
constexpr int kModelMismatch = 4;
constexpr int kJoinFailure = 5;
constexpr int kAlignmentFailure = 6;

struct CliError : std::runtime_error {
  CliError(int code_arg, const std::string& what) : std::runtime_error(what), code(code_arg) {}
  int code;
};

struct Manifest {
  std::string command;
  uint64_t seed = 0;
  std::map<std::string, std::string> files;

  void record(const std::string& name, const std::string& bytes) {
    files[name] = content_hash(bytes);
  }

  void write(const fs::path& dir) const {
    json j;
    j["command"] = command;
    j["seed"] = seed;
    j["files"] = files;
    std::ofstream out(dir / "manifest.json");
    out << j.dump(2) << '\n';
  }
};

void write_output(const fs::path& dir, const std::string& name, const std::string& bytes,
                  Manifest& manifest) {
  fs::path path = dir / name;
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError(kGenericError, "cannot write " + path.string());
  out.write(bytes.data(), std::streamsize(bytes.size()));
  manifest.record(name, bytes);
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw CliError(kConfigError, "cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw CliError(kConfigError, std::string("config parse error: ") + e.what());
  }
}

template <typename T>
T cfg_get(const json& cfg, const std::string& section, const std::string& key, T fallback) {
  if (!cfg.contains(section)) return fallback;
  const json& s = cfg.at(section);
  if (!s.contains(key)) return fallback;
  try {
    return s.at(key).get<T>();
  } catch (const json::exception& e) {
    throw CliError(kConfigError, "config key " + section + "." + key + ": " + e.what());
  }
}

uint64_t resolve_seed(const json& cfg, int64_t flag_seed) {
  if (flag_seed >= 0) return uint64_t(flag_seed);
  if (cfg.contains("seed")) return cfg.at("seed").get<uint64_t>();
  return 1;
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) throw CliError(kConfigError, what + " not found: " + path);
}

text::Segmenter make_segmenter(const json& cfg) {
  std::string abbr = cfg.value("abbreviations_file", "");
  if (abbr.empty()) return text::Segmenter();
  require_file(abbr, "abbreviation list");
  return text::Segmenter(text::Segmenter::load_abbreviations(abbr));
}

// --- shared loading -----------------------------------------------------------

std::vector<corpus::Report> load_reports_file(const std::string& path) {
  require_file(path, "reports file");
  std::ifstream in(path);
  corpus::JsonlReader reader(in);
  std::vector<corpus::Report> out;
  while (auto r = reader.next()) out.push_back(std::move(*r));
  return out;
}

// Corpus directory layout from `generate`: corpus.jsonl plus brat/<id>.ann.
std::vector<corpus::AnnotatedReport> load_annotated_corpus(const std::string& dir) {
  fs::path corpus_path = fs::path(dir) / "corpus.jsonl";
  require_file(corpus_path.string(), "corpus.jsonl");
  std::vector<corpus::AnnotatedReport> out;
  for (corpus::Report& r : load_reports_file(corpus_path.string())) {
    corpus::AnnotatedReport ann;
    fs::path ann_path = fs::path(dir) / "brat" / (r.report_id + ".ann");
    if (fs::exists(ann_path)) {
      std::ifstream ann_in(ann_path);
      std::stringstream buf;
      buf << ann_in.rdbuf();
      ann = corpus::read_brat(r.text, buf.str());
    } else {
      ann.report.text = r.text;
    }
    ann.report = std::move(r);
    out.push_back(std::move(ann));
  }
  return out;
}

embed::LoadedEmbeddings load_embeddings_file(const std::string& path) {
  require_file(path, "embeddings file");
  std::ifstream in(path);
  return embed::read_embeddings(in);
}

std::string metrics_csv(const std::vector<std::tuple<std::string, eval::Metrics, uint64_t>>& rows) {
  std::ostringstream out;
  out << "entity_or_task,precision,recall,f1,support\n";
  char buf[64];
  for (const auto& [name, m, support] : rows) {
    std::snprintf(buf, sizeof(buf), "%.4f,%.4f,%.4f", m.precision, m.recall, m.f1);
    out << name << ',' << buf << ',' << support << '\n';
  }
  return out.str();
}

// --- generate -----------------------------------------------------------------

synthetic::Config synthetic_config(const json& cfg) {
  synthetic::Config c;
  c.n_reports = cfg_get<size_t>(cfg, "generate", "n_reports", c.n_reports);
  c.patients = cfg_get<size_t>(cfg, "generate", "patients", c.patients);
  c.positive_rate = cfg_get<double>(cfg, "generate", "positive_rate", c.positive_rate);
  c.sentences_per_report =
      cfg_get<double>(cfg, "generate", "sentences_per_report", c.sentences_per_report);
  c.p_no_followup = cfg_get<double>(cfg, "generate", "p_no_followup", c.p_no_followup);
  c.p_early = cfg_get<double>(cfg, "generate", "p_early", c.p_early);
  c.p_late = cfg_get<double>(cfg, "generate", "p_late", c.p_late);
  c.p_censored = cfg_get<double>(cfg, "generate", "p_censored", c.p_censored);
  c.timeframe_rate = cfg_get<double>(cfg, "generate", "timeframe_rate", c.timeframe_rate);
  c.unparseable_rate = cfg_get<double>(cfg, "generate", "unparseable_rate", c.unparseable_rate);
  c.test_rate = cfg_get<double>(cfg, "generate", "test_rate", c.test_rate);
  c.reason_rate = cfg_get<double>(cfg, "generate", "reason_rate", c.reason_rate);
  c.header_rate = cfg_get<double>(cfg, "generate", "header_rate", c.header_rate);
  if (cfg.contains("generate") && cfg.at("generate").contains("modality_mix")) {
    for (auto& [name, weight] : cfg.at("generate").at("modality_mix").items()) {
      auto m = corpus::modality_from_string(name);
      if (!m) throw CliError(kConfigError, "unknown modality in modality_mix: " + name);
      c.modality_mix[*m] = weight.get<double>();
    }
  }
  auto window_start = cfg_get<std::string>(cfg, "generate", "window_start", "");
  auto window_end = cfg_get<std::string>(cfg, "generate", "window_end", "");
  if (!window_start.empty()) {
    auto d = timeutil::parse_date(window_start);
    if (!d) throw CliError(kConfigError, "bad generate.window_start");
    c.window_start = *d;
  }
  if (!window_end.empty()) {
    auto d = timeutil::parse_date(window_end);
    if (!d) throw CliError(kConfigError, "bad generate.window_end");
    c.window_end = *d;
  }
  return c;
}

int cmd_generate(const json& cfg, uint64_t seed, const std::string& out_dir, bool skip_brat) {
  synthetic::Config scfg = synthetic_config(cfg);
  synthetic::Corpus corpus;
  try {
    corpus = synthetic::generate(scfg, seed);
  } catch (const std::invalid_argument& e) {
    throw CliError(kConfigError, e.what());
  }

  fs::create_directories(out_dir);
  Manifest manifest;
  manifest.command = "generate";
  manifest.seed = seed;

  std::ostringstream jsonl;
  for (const synthetic::GoldReport& g : corpus.reports) {
    jsonl << corpus::report_to_json_line(g.annotated.report) << '\n';
  }
  write_output(out_dir, "corpus.jsonl", jsonl.str(), manifest);

  if (!skip_brat) {
    Fnv1a brat_hash;
    fs::create_directories(fs::path(out_dir) / "brat");
    for (const synthetic::GoldReport& g : corpus.reports) {
      corpus::BratFiles files = corpus::write_brat(g.annotated);
      const std::string& id = g.annotated.report.report_id;
      std::ofstream txt(fs::path(out_dir) / "brat" / (id + ".txt"), std::ios::binary);
      txt << files.txt;
      std::ofstream ann(fs::path(out_dir) / "brat" / (id + ".ann"), std::ios::binary);
      ann << files.ann;
      brat_hash.update(id);
      brat_hash.update(files.txt);
      brat_hash.update(files.ann);
    }
    manifest.files["brat/"] = brat_hash.hex();
  }

  write_output(out_dir, "gold_outcomes.csv", synthetic::gold_outcomes_csv(corpus), manifest);
  write_output(out_dir, "gold_table9.csv",
               adherence::same_modality_csv(synthetic::gold_same_modality(corpus)), manifest);
  write_output(out_dir, "gold_table10.csv",
               adherence::timed_csv(synthetic::gold_timed(corpus)), manifest);

  size_t n_rec = 0, n_timed = 0;
  for (const auto& g : corpus.reports) {
    if (g.has_recommendation) ++n_rec;
    if (g.timed_outcome) ++n_timed;
  }
  json meta;
  meta["dataset_end"] = timeutil::format_date(corpus.dataset_end);
  meta["seed"] = seed;
  meta["n_reports"] = corpus.reports.size();
  meta["n_recommendation_reports"] = n_rec;
  meta["n_timed_reports"] = n_timed;
  write_output(out_dir, "metadata.json", meta.dump(2) + "\n", manifest);

  manifest.write(out_dir);
  std::cout << "generated " << corpus.reports.size() << " reports (" << n_rec
            << " with recommendations, " << n_timed << " timed)\n";
  return kOk;
}

// --- train-embeddings ------------------------------------------------------------

int cmd_train_embeddings(const json& cfg, uint64_t seed, const std::string& corpus_path,
                         const std::string& out_dir) {
  text::Segmenter segmenter = make_segmenter(cfg);
  std::vector<std::vector<std::string>> sentences;
  for (const corpus::Report& r : load_reports_file(corpus_path)) {
    for (auto& s : pipeline::to_token_stream(r, segmenter)) sentences.push_back(std::move(s));
  }

  embed::SkipgramConfig sg;
  sg.dim = cfg_get<size_t>(cfg, "embeddings", "dim", sg.dim);
  sg.window = cfg_get<size_t>(cfg, "embeddings", "window", sg.window);
  sg.negatives = cfg_get<size_t>(cfg, "embeddings", "negatives", sg.negatives);
  sg.min_count = cfg_get<size_t>(cfg, "embeddings", "min_count", sg.min_count);
  sg.epochs = cfg_get<size_t>(cfg, "embeddings", "epochs", sg.epochs);
  sg.lr = cfg_get<double>(cfg, "embeddings", "lr", sg.lr);
  sg.seed = seed;

  embed::SkipgramResult result;
  try {
    result = embed::train_skipgram(sentences, sg);
  } catch (const std::invalid_argument& e) {
    throw CliError(kDegenerateData, e.what());
  }

  fs::create_directories(out_dir);
  Manifest manifest;
  manifest.command = "train-embeddings";
  manifest.seed = seed;

  std::ostringstream emb;
  embed::write_embeddings(emb, result.vocab, result.embeddings);
  write_output(out_dir, "embeddings.txt", emb.str(), manifest);
  manifest.write(out_dir);

  std::cout << "trained embeddings: vocab " << result.vocab.size() << ", dim " << sg.dim
            << ", final epoch loss " << (result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back())
            << "\n";
  return kOk;
}

// --- train-sentence ------------------------------------------------------------

han::HanConfig han_config(const json& cfg) {
  han::HanConfig c;
  c.word_hidden = cfg_get<size_t>(cfg, "sentence_model", "word_hidden", c.word_hidden);
  c.sent_hidden = cfg_get<size_t>(cfg, "sentence_model", "sent_hidden", c.sent_hidden);
  c.attn_dim = cfg_get<size_t>(cfg, "sentence_model", "attn_dim", c.attn_dim);
  c.dropout = cfg_get<double>(cfg, "sentence_model", "dropout", c.dropout);
  c.max_tokens = cfg_get<size_t>(cfg, "sentence_model", "max_tokens", c.max_tokens);
  c.max_sentences = cfg_get<size_t>(cfg, "sentence_model", "max_sentences", c.max_sentences);
  c.threshold = cfg_get<double>(cfg, "sentence_model", "threshold", c.threshold);
  c.positive_weight = cfg_get<double>(cfg, "sentence_model", "positive_weight", c.positive_weight);
  return c;
}

int cmd_train_sentence(const json& cfg, uint64_t seed, const std::string& corpus_dir,
                       const std::string& embeddings_path, const std::string& out_dir) {
  auto loaded = load_embeddings_file(embeddings_path);
  text::Segmenter segmenter = make_segmenter(cfg);

  std::vector<han::ReportExample> examples;
  for (const corpus::AnnotatedReport& ann : load_annotated_corpus(corpus_dir)) {
    examples.push_back(pipeline::to_han_example(ann, segmenter));
  }

  han::HanModel model(loaded.vocab, loaded.embeddings, han_config(cfg));
  han::TrainConfig tc;
  tc.lr = cfg_get<double>(cfg, "sentence_model", "lr", tc.lr);
  tc.max_epochs = cfg_get<size_t>(cfg, "sentence_model", "max_epochs", tc.max_epochs);
  tc.patience = cfg_get<size_t>(cfg, "sentence_model", "patience", tc.patience);
  tc.val_fraction = cfg_get<double>(cfg, "sentence_model", "val_fraction", tc.val_fraction);
  tc.clip_norm = cfg_get<double>(cfg, "sentence_model", "clip_norm", tc.clip_norm);
  tc.seed = seed;

  han::TrainResult result;
  try {
    result = model.train(examples, tc);
  } catch (const std::invalid_argument& e) {
    throw CliError(kDegenerateData, e.what());
  }

  fs::create_directories(out_dir);
  Manifest manifest;
  manifest.command = "train-sentence";
  manifest.seed = seed;

  model.save((fs::path(out_dir) / "han.ckpt").string(),
             (fs::path(out_dir) / "han.json").string());
  {
    std::ifstream ckpt(fs::path(out_dir) / "han.ckpt", std::ios::binary);
    std::stringstream buf;
    buf << ckpt.rdbuf();
    manifest.record("han.ckpt", buf.str());
    std::ifstream side(fs::path(out_dir) / "han.json");
    std::stringstream sbuf;
    sbuf << side.rdbuf();
    manifest.record("han.json", sbuf.str());
  }

  std::ostringstream history;
  history << "epoch,train_loss,val_f1\n";
  char buf[64];
  for (const han::EpochStats& e : result.history) {
    std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f", e.epoch, e.train_loss, e.val_f1);
    history << buf << '\n';
  }
  write_output(out_dir, "history.csv", history.str(), manifest);
  manifest.write(out_dir);

  std::cout << "early stopping: best epoch " << result.best_epoch << ", validation F1 "
            << result.best_val_f1 << " (" << result.history.size() << " epochs run)\n";
  return kOk;
}

// --- train-ner ------------------------------------------------------------------

ner::NerConfig ner_config(const json& cfg) {
  ner::NerConfig c;
  c.char_embed_dim = cfg_get<size_t>(cfg, "ner_model", "char_embed_dim", c.char_embed_dim);
  c.char_hidden = cfg_get<size_t>(cfg, "ner_model", "char_hidden", c.char_hidden);
  c.word_hidden = cfg_get<size_t>(cfg, "ner_model", "word_hidden", c.word_hidden);
  std::string mode = cfg_get<std::string>(cfg, "ner_model", "decode_mode", "argmax");
  if (mode != "argmax" && mode != "viterbi")
    throw CliError(kConfigError, "ner_model.decode_mode must be argmax or viterbi");
  c.decode_mode = mode == "viterbi" ? ner::DecodeMode::Viterbi : ner::DecodeMode::Argmax;
  return c;
}

int cmd_train_ner(const json& cfg, uint64_t seed, const std::string& corpus_dir,
                  const std::string& embeddings_path, const std::string& out_dir) {
  auto loaded = load_embeddings_file(embeddings_path);

  std::vector<ner::SentenceExample> sentences;
  for (const corpus::AnnotatedReport& ann : load_annotated_corpus(corpus_dir)) {
    for (auto& s : pipeline::to_ner_sentences(ann)) sentences.push_back(std::move(s));
  }
  if (sentences.empty())
    throw CliError(kDegenerateData, "corpus has no annotated recommendation sentences");

  ner::NerConfig nc = ner_config(cfg);
  ner::TrainConfig tc;
  tc.lr = cfg_get<double>(cfg, "ner_model", "lr", tc.lr);
  tc.epochs = cfg_get<size_t>(cfg, "ner_model", "epochs", tc.epochs);
  tc.clip_norm = cfg_get<double>(cfg, "ner_model", "clip_norm", tc.clip_norm);
  tc.seed = seed;
  size_t folds = cfg_get<size_t>(cfg, "ner_model", "cv_folds", 5);

  fs::create_directories(out_dir);
  Manifest manifest;
  manifest.command = "train-ner";
  manifest.seed = seed;

  if (folds > 1) {
    ner::CvResult cv;
    try {
      cv = ner::cross_validate(loaded.vocab, loaded.embeddings, nc, tc, sentences, folds, seed);
    } catch (const std::invalid_argument& e) {
      throw CliError(kDegenerateData, e.what());
    }
    std::map<std::string, uint64_t> support;
    for (const auto& s : sentences) {
      for (const auto& t : s.gold) {
        if (!ner::is_outside(t)) support[corpus::entity_kind_name(ner::tag_kind(t))]++;
      }
    }
    std::vector<std::tuple<std::string, eval::Metrics, uint64_t>> rows;
    for (const auto& [type, m] : cv.per_type) rows.emplace_back(type, m, support[type]);
    uint64_t total = 0;
    for (const auto& [_, n] : support) total += n;
    rows.emplace_back("micro", cv.micro, total);
    write_output(out_dir, "cv_metrics.csv", metrics_csv(rows), manifest);
    std::cout << "cross-validation micro F1 " << cv.micro.f1 << " over " << folds << " folds\n";
  }

  std::vector<char32_t> chars = ner::build_char_vocab(sentences);
  ner::NerModel model(loaded.vocab, loaded.embeddings, chars, nc);
  auto stats = model.train(sentences, tc);

  model.save((fs::path(out_dir) / "ner.ckpt").string(),
             (fs::path(out_dir) / "ner.json").string());
  {
    std::ifstream ckpt(fs::path(out_dir) / "ner.ckpt", std::ios::binary);
    std::stringstream buf;
    buf << ckpt.rdbuf();
    manifest.record("ner.ckpt", buf.str());
    std::ifstream side(fs::path(out_dir) / "ner.json");
    std::stringstream sbuf;
    sbuf << side.rdbuf();
    manifest.record("ner.json", sbuf.str());
  }
  manifest.write(out_dir);

  std::cout << "trained tagger on " << sentences.size() << " sentences, final epoch loss "
            << (stats.epoch_loss.empty() ? 0.0 : stats.epoch_loss.back()) << "\n";
  return kOk;
}

// --- extract ---------------------------------------------------------------------

int cmd_extract(const json& cfg, const std::string& reports_path, const std::string& han_dir,
                const std::string& ner_dir, const std::string& out_dir) {
  require_file(reports_path, "reports file");
  auto han_model = han::HanModel::load((fs::path(han_dir) / "han.ckpt").string(),
                                       (fs::path(han_dir) / "han.json").string());
  auto ner_model = ner::NerModel::load((fs::path(ner_dir) / "ner.ckpt").string(),
                                       (fs::path(ner_dir) / "ner.json").string());
  if (han_model->vocab().hash() != ner_model->vocab().hash())
    throw CliError(kModelMismatch,
                   "sentence model and tagger were built on different vocabularies");

  text::Segmenter segmenter = make_segmenter(cfg);
  fs::create_directories(out_dir);

  std::ifstream in(reports_path);
  corpus::JsonlReader reader(in);
  std::ofstream out(fs::path(out_dir) / "predictions.jsonl", std::ios::binary);
  Fnv1a hash;
  size_t n = 0;
  while (auto report = reader.next()) {
    pipeline::Extraction e = pipeline::extract_report(*report, segmenter, *han_model, *ner_model);
    std::string line = pipeline::extraction_to_json_line(e) + "\n";
    out.write(line.data(), std::streamsize(line.size()));
    hash.update(line);
    ++n;
  }
  out.close();

  Manifest manifest;
  manifest.command = "extract";
  manifest.seed = 0;
  manifest.files["predictions.jsonl"] = hash.hex();
  manifest.write(out_dir);
  std::cout << "extracted predictions for " << n << " reports\n";
  return kOk;
}

// --- analyze ---------------------------------------------------------------------

int cmd_analyze(const json& cfg, const std::string& predictions_path,
                const std::string& reports_path, int grace_days,
                const std::string& dataset_end_flag, const std::string& out_dir) {
  require_file(predictions_path, "predictions file");
  require_file(reports_path, "reports file");

  std::vector<adherence::ReportRef> refs;
  std::unordered_map<std::string, size_t> by_id;
  timeutil::EpochSeconds max_ts = 0;
  {
    std::ifstream in(reports_path);
    corpus::JsonlReader reader(in);
    while (auto r = reader.next()) {
      by_id.emplace(r->report_id, refs.size());
      refs.push_back(adherence::ReportRef{r->report_id, r->patient_id, r->modality, r->timestamp});
      max_ts = std::max(max_ts, r->timestamp);
    }
  }

  timeutil::Date dataset_end = timeutil::to_date(max_ts);
  std::string end_str = dataset_end_flag.empty()
                            ? cfg_get<std::string>(cfg, "adherence", "dataset_end", "")
                            : dataset_end_flag;
  if (!end_str.empty()) {
    auto d = timeutil::parse_date(end_str);
    if (!d) throw CliError(kConfigError, "bad dataset end date: " + end_str);
    dataset_end = *d;
  }
  if (grace_days < 0) grace_days = cfg_get<int>(cfg, "adherence", "grace_days", 0);

  std::vector<adherence::ReportRef> rec_refs;
  std::vector<adherence::RecommendationReport> recs;
  uint64_t n_rec_sentences = 0, n_with_tf = 0, n_normalized_sentences = 0, n_instances = 0;
  {
    std::ifstream in(predictions_path);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      pipeline::Extraction e = pipeline::extraction_from_json_line(line, line_no);
      auto it = by_id.find(e.report_id);
      if (it == by_id.end())
        throw CliError(kJoinFailure, "prediction for unknown report_id " + e.report_id);

      std::set<size_t> positive;
      for (const auto& s : e.sentences) {
        if (s.positive) positive.insert(s.index);
      }
      if (positive.empty()) continue;
      n_rec_sentences += positive.size();

      std::set<size_t> with_tf, normalized;
      adherence::RecommendationReport rec;
      rec.report_id = e.report_id;
      for (const auto& tf : e.timeframes) {
        with_tf.insert(tf.sentence);
        if (tf.normalized) {
          normalized.insert(tf.sentence);
          rec.timeframes.push_back(*tf.normalized);
          ++n_instances;
        }
      }
      n_with_tf += with_tf.size();
      n_normalized_sentences += normalized.size();
      rec_refs.push_back(refs[it->second]);
      recs.push_back(std::move(rec));
    }
  }

  auto timelines = adherence::build_timelines(refs);
  auto table9 = adherence::analyze_same_modality(timelines, rec_refs);
  adherence::TimedAnalysis timed =
      adherence::analyze_timed(timelines, refs, recs, dataset_end, grace_days);

  uint64_t censored_instances = 0, censored_reports = 0, participating = 0;
  for (const auto& rec : timed.records) {
    for (const auto& [_, outcome] : rec.per_recommendation) {
      if (outcome == adherence::Outcome::Censored) ++censored_instances;
    }
    if (rec.report_outcome == adherence::Outcome::Censored) {
      ++censored_reports;
    } else {
      ++participating;
    }
  }

  fs::create_directories(out_dir);
  Manifest manifest;
  manifest.command = "analyze";
  manifest.seed = 0;
  write_output(out_dir, "table9.csv", adherence::same_modality_csv(table9), manifest);
  write_output(out_dir, "table10.csv", adherence::timed_csv(timed.per_modality), manifest);

  std::ostringstream attrition;
  attrition << "metric,count\n";
  attrition << "recommendation_reports," << rec_refs.size() << '\n';
  attrition << "recommendation_sentences," << n_rec_sentences << '\n';
  attrition << "sentences_with_timeframe," << n_with_tf << '\n';
  attrition << "sentences_with_normalized_timeframe," << n_normalized_sentences << '\n';
  attrition << "recommendation_instances," << n_instances << '\n';
  attrition << "censored_instances," << censored_instances << '\n';
  attrition << "reports_participating_timed," << participating << '\n';
  attrition << "reports_censored," << censored_reports << '\n';
  write_output(out_dir, "attrition.csv", attrition.str(), manifest);
  manifest.write(out_dir);

  std::cout << "analyzed " << rec_refs.size() << " recommendation reports; " << participating
            << " timed (" << censored_reports << " censored)\n";
  return kOk;
}

// --- evaluate --------------------------------------------------------------------

int cmd_evaluate(const json& cfg, const std::string& gold_dir, const std::string& pred_path,
                 const std::string& mode, double threshold, const std::string& out_csv) {
  require_file(pred_path, "predictions file");
  auto annotated = load_annotated_corpus(gold_dir);
  text::Segmenter segmenter = make_segmenter(cfg);

  std::unordered_map<std::string, pipeline::Extraction> predictions;
  {
    std::ifstream in(pred_path);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      pipeline::Extraction e = pipeline::extraction_from_json_line(line, line_no);
      predictions.emplace(e.report_id, std::move(e));
    }
  }

  auto find_prediction = [&](const std::string& id) -> const pipeline::Extraction& {
    auto it = predictions.find(id);
    if (it == predictions.end())
      throw CliError(kAlignmentFailure, "no prediction record for report " + id);
    return it->second;
  };

  std::vector<std::tuple<std::string, eval::Metrics, uint64_t>> rows;

  if (mode == "sentence") {
    eval::ConfusionCounts counts;
    for (const corpus::AnnotatedReport& ann : annotated) {
      const pipeline::Extraction& pred = find_prediction(ann.report.report_id);
      auto sentences = segmenter.split_sentences(ann.report.text);
      if (sentences.size() != pred.sentences.size())
        throw CliError(kAlignmentFailure,
                       "sentence count mismatch for report " + ann.report.report_id);
      for (size_t i = 0; i < sentences.size(); ++i) {
        bool gold = false;
        for (const corpus::CharRange& r : ann.rec_sentence_spans) {
          if (sentences[i].begin < r.end && sentences[i].end > r.begin) gold = true;
        }
        bool positive = pred.sentences[i].probability >= threshold;
        if (positive && gold) counts.tp++;
        else if (positive && !gold) counts.fp++;
        else if (!positive && gold) counts.fn++;
        else counts.tn++;
      }
    }
    rows.emplace_back("sentence", eval::confusion_to_metrics(counts), counts.tp + counts.fn);
  } else if (mode == "token") {
    std::vector<std::string> gold_tags, pred_tags;
    for (const corpus::AnnotatedReport& ann : annotated) {
      if (ann.rec_sentence_spans.empty()) continue;
      const pipeline::Extraction& pred = find_prediction(ann.report.report_id);
      std::vector<corpus::EntitySpan> pred_spans;
      for (const auto& e : pred.entities) pred_spans.push_back(e.span);
      for (const corpus::CharRange& span : ann.rec_sentence_spans) {
        auto tokens = text::tokenize(ann.report.text, span.begin, span.end);
        if (tokens.empty()) continue;
        std::vector<corpus::EntitySpan> gold_inside;
        for (const auto& e : ann.entities) {
          if (e.begin >= span.begin && e.end <= span.end) gold_inside.push_back(e);
        }
        auto g = ner::encode_tags(gold_inside, tokens);
        auto p = ner::encode_tags(pred_spans, tokens);
        for (size_t t = 0; t < tokens.size(); ++t) {
          gold_tags.push_back(ner::tag_name(g[t]));
          pred_tags.push_back(ner::tag_name(p[t]));
        }
      }
    }
    std::map<std::string, uint64_t> support;
    for (const std::string& t : gold_tags) {
      if (t != "O") support[t.substr(t.find('-') + 1)]++;
    }
    for (const auto& [type, m] : eval::token_level_eval(gold_tags, pred_tags)) {
      rows.emplace_back(type, m, support[type]);
    }
    uint64_t total = 0;
    for (const auto& [_, n] : support) total += n;
    rows.emplace_back(
        "micro",
        eval::confusion_to_metrics(eval::token_level_counts_pooled(gold_tags, pred_tags)), total);
  } else if (mode == "span") {
    std::vector<eval::KeyedSpan> gold, pred;
    for (const corpus::AnnotatedReport& ann : annotated) {
      for (const auto& e : ann.entities) {
        gold.push_back(eval::KeyedSpan{ann.report.report_id, e.kind, e.begin, e.end});
      }
      auto it = predictions.find(ann.report.report_id);
      if (it == predictions.end()) {
        if (!ann.rec_sentence_spans.empty())
          throw CliError(kAlignmentFailure,
                         "no prediction record for report " + ann.report.report_id);
        continue;
      }
      for (const auto& e : it->second.entities) {
        pred.push_back(eval::KeyedSpan{ann.report.report_id, e.span.kind, e.span.begin, e.span.end});
      }
    }
    std::map<std::string, uint64_t> support;
    for (const auto& s : gold) support[corpus::entity_kind_name(s.kind)]++;
    for (const auto& [type, m] : eval::span_level_eval(gold, pred)) {
      rows.emplace_back(type, m, support[type]);
    }
    rows.emplace_back("overall", eval::span_level_overall(gold, pred), gold.size());
  } else {
    throw CliError(kConfigError, "evaluate mode must be sentence, token or span");
  }

  std::string csv = metrics_csv(rows);
  fs::create_directories(fs::path(out_csv).parent_path().empty()
                             ? fs::path(".")
                             : fs::path(out_csv).parent_path());
  std::ofstream out(out_csv, std::ios::binary);
  out << csv;
  std::cout << csv;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"radiology follow-up recommendation extraction pipeline"};
  app.require_subcommand(1);

  std::string config_path, out_dir, corpus_path, embeddings_path, reports_path;
  std::string han_dir, ner_dir, predictions_path, gold_dir, mode = "sentence", dataset_end;
  std::string out_csv;
  int64_t seed_flag = -1;
  int grace_days = -1;
  bool skip_brat = false;
  double threshold = 0.5;

  auto* generate = app.add_subcommand("generate", "write a synthetic annotated corpus");
  generate->add_option("--config", config_path);
  generate->add_option("--seed", seed_flag);
  generate->add_option("--out", out_dir)->required();
  generate->add_flag("--skip-brat", skip_brat, "skip writing BRAT gold files");

  auto* tremb = app.add_subcommand("train-embeddings", "pretrain skip-gram word embeddings");
  tremb->add_option("--config", config_path);
  tremb->add_option("--seed", seed_flag);
  tremb->add_option("--corpus", corpus_path)->required();
  tremb->add_option("--out", out_dir)->required();

  auto* trsent = app.add_subcommand("train-sentence", "train the recommendation sentence classifier");
  trsent->add_option("--config", config_path);
  trsent->add_option("--seed", seed_flag);
  trsent->add_option("--corpus", corpus_path)->required();
  trsent->add_option("--embeddings", embeddings_path)->required();
  trsent->add_option("--out", out_dir)->required();

  auto* trner = app.add_subcommand("train-ner", "train the entity tagger");
  trner->add_option("--config", config_path);
  trner->add_option("--seed", seed_flag);
  trner->add_option("--corpus", corpus_path)->required();
  trner->add_option("--embeddings", embeddings_path)->required();
  trner->add_option("--out", out_dir)->required();

  auto* extract = app.add_subcommand("extract", "run both models over a report stream");
  extract->add_option("--config", config_path);
  extract->add_option("--reports", reports_path)->required();
  extract->add_option("--sentence-model", han_dir)->required();
  extract->add_option("--ner-model", ner_dir)->required();
  extract->add_option("--out", out_dir)->required();

  auto* analyze = app.add_subcommand("analyze", "compute follow-up adherence tables");
  analyze->add_option("--config", config_path);
  analyze->add_option("--predictions", predictions_path)->required();
  analyze->add_option("--reports", reports_path)->required();
  analyze->add_option("--grace-days", grace_days);
  analyze->add_option("--dataset-end", dataset_end);
  analyze->add_option("--out", out_dir)->required();

  auto* evaluate = app.add_subcommand("evaluate", "score predictions against gold annotations");
  evaluate->add_option("--config", config_path);
  evaluate->add_option("--gold", gold_dir)->required();
  evaluate->add_option("--pred", predictions_path)->required();
  evaluate->add_option("--mode", mode)->check(CLI::IsMember({"sentence", "token", "span"}));
  evaluate->add_option("--threshold", threshold);
  evaluate->add_option("--out", out_csv)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    json cfg = load_config(config_path);
    uint64_t seed = resolve_seed(cfg, seed_flag);

    if (generate->parsed()) return cmd_generate(cfg, seed, out_dir, skip_brat);
    if (tremb->parsed()) return cmd_train_embeddings(cfg, seed, corpus_path, out_dir);
    if (trsent->parsed())
      return cmd_train_sentence(cfg, seed, corpus_path, embeddings_path, out_dir);
    if (trner->parsed()) return cmd_train_ner(cfg, seed, corpus_path, embeddings_path, out_dir);
    if (extract->parsed()) return cmd_extract(cfg, reports_path, han_dir, ner_dir, out_dir);
    if (analyze->parsed())
      return cmd_analyze(cfg, predictions_path, reports_path, grace_days, dataset_end, out_dir);
    if (evaluate->parsed())
      return cmd_evaluate(cfg, gold_dir, predictions_path, mode, threshold, out_csv);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code;
  } catch (const corpus::RecordError& e) {
    std::cerr << "record error: " << e.what() << "\n";
    return kGenericError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kGenericError;
  }
  return kOk;
}
