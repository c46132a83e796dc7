#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "radrec/embed.hpp"
#include "radrec/eval.hpp"
#include "radrec/nn.hpp"

namespace radrec::han {

struct HanConfig {
  size_t word_hidden = 300;  // GRU units per direction, word encoder
  size_t sent_hidden = 300;  // GRU units per direction, sentence encoder
  size_t attn_dim = 0;       // 0 -> 2 * word_hidden
  double dropout = 0.4;
  size_t max_tokens = 120;    // truncation bounds, logged when hit
  size_t max_sentences = 200;
  double threshold = 0.5;
  double positive_weight = 1.0;  // optional class weight for the minority class
};

struct TrainConfig {
  double lr = 1e-3;
  size_t max_epochs = 50;
  size_t patience = 15;
  double val_fraction = 0.1;
  uint64_t seed = 1;
  double clip_norm = 0.0;  // 0 disables clipping
};

struct SentencePrediction {
  size_t sentence_index = 0;
  double probability = 0.0;  // p(recommendation)
  bool positive = false;
};

// One report prepared for the classifier: token norms per sentence, plus
// aligned 0/1 labels when the report is annotated.
struct ReportExample {
  std::string report_id;
  std::vector<std::vector<std::string>> sentences;
  std::vector<int> labels;
};

struct EpochStats {
  size_t epoch = 0;
  double train_loss = 0.0;
  double val_f1 = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  size_t best_epoch = 0;
  double best_val_f1 = 0.0;
  size_t truncated_sentences = 0;
  size_t truncated_reports = 0;
};

// Word-level BiGRU + attention builds sentence vectors; a sentence-level
// BiGRU contextualizes them; a shared dense head scores every sentence.
class HanModel {
 public:
  HanModel(embed::Vocabulary vocab, const nn::Tensor& pretrained_embeddings, HanConfig config);

  HanModel(const HanModel&) = delete;
  HanModel& operator=(const HanModel&) = delete;
  HanModel(HanModel&&) = delete;

  // Sentence vector plus word attention weights (weights sum to 1).
  std::pair<nn::Vec, nn::Vec> encode_sentence(const std::vector<std::string>& tokens) const;

  std::vector<SentencePrediction> classify_report(
      const std::vector<std::vector<std::string>>& sentences) const;

  const HanConfig& config() const { return cfg_; }
  const embed::Vocabulary& vocab() const { return vocab_; }
  nn::ParamSet& params() { return params_; }
  const nn::ParamSet& params() const { return params_; }

  void save(const std::string& checkpoint_path, const std::string& sidecar_path) const;
  static std::unique_ptr<HanModel> load(const std::string& checkpoint_path,
                                        const std::string& sidecar_path);

  // Training entry point; re-initializes non-embedding parameters from the
  // seed, runs early stopping on validation F1 (positive class), and leaves
  // the best epoch's weights in place.
  TrainResult train(const std::vector<ReportExample>& corpus, const TrainConfig& train_cfg);

 private:
  friend struct HanGradientProbe;
  struct ReportCache;
  struct ForwardOut;

  ForwardOut forward_report(const std::vector<std::vector<std::string>>& sentences,
                            nn::Mode mode, Rng* dropout_rng, ReportCache* cache) const;
  double backward_report(const ReportCache& cache, const std::vector<int>& labels);

  embed::Vocabulary vocab_;
  HanConfig cfg_;
  nn::ParamSet params_;
  nn::Param* embedding_ = nullptr;
  nn::BiGru word_encoder_;
  nn::AttentionPool word_attention_;
  nn::BiGru sentence_encoder_;
  nn::Dense head_;
};

eval::ConfusionCounts evaluate_sentence_model(const HanModel& model,
                                              const std::vector<ReportExample>& test_set,
                                              double threshold);

// Positive-class F1 at the given threshold.
double validation_f1(const HanModel& model, const std::vector<ReportExample>& reports,
                     double threshold);

}  // namespace radrec::han
