#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "radrec/corpus.hpp"
#include "radrec/embed.hpp"
#include "radrec/eval.hpp"
#include "radrec/nn.hpp"
#include "radrec/text.hpp"

namespace radrec::ner {

// 13 labels: O plus {B,I,E,S} x {reason, test, timeframe}.
inline constexpr size_t kNumTags = 13;

struct BioesTag {
  uint8_t id = 0;  // 0 is O

  bool operator==(const BioesTag&) const = default;
};

const std::string& tag_name(BioesTag t);
BioesTag tag_from_name(const std::string& name);
BioesTag make_tag(char prefix, corpus::EntityKind kind);  // prefix in BIES
bool is_outside(BioesTag t);
char tag_prefix(BioesTag t);                 // 'O','B','I','E','S'
corpus::EntityKind tag_kind(BioesTag t);     // undefined for O

// BIOES adjacency: after B-x/I-x only I-x/E-x of the same type; E-x/S-x/O may
// be followed by O, B-y or S-y. Sequences additionally must start with
// O/B/S and end with O/E/S.
bool valid_transition(BioesTag from, BioesTag to);
bool valid_start(BioesTag t);
bool valid_end(BioesTag t);

enum class DecodeMode { Argmax, Viterbi };

struct NerConfig {
  size_t char_embed_dim = 25;
  size_t char_hidden = 25;   // per direction
  size_t word_hidden = 100;  // per direction
  double dropout = 0.0;
  DecodeMode decode_mode = DecodeMode::Argmax;
};

struct TrainConfig {
  double lr = 1e-3;
  size_t epochs = 30;
  uint64_t seed = 1;
  double clip_norm = 0.0;
};

// One recommendation sentence prepared for tagging.
struct SentenceExample {
  std::string report_id;
  std::vector<text::Token> tokens;
  std::vector<BioesTag> gold;  // empty when unlabeled
};

// Character-enhanced token embeddings -> BiLSTM -> per-token 13-way logits,
// decoded greedily or with transition-constrained Viterbi.
class NerModel {
 public:
  NerModel(embed::Vocabulary vocab, const nn::Tensor& pretrained_embeddings,
           std::vector<char32_t> char_vocab, NerConfig config);

  NerModel(const NerModel&) = delete;
  NerModel& operator=(const NerModel&) = delete;

  // Concatenated final hidden states of the char BiLSTM.
  nn::Vec char_encode(const std::string& surface) const;

  std::vector<BioesTag> tag_sentence(const std::vector<text::Token>& tokens,
                                     DecodeMode mode) const;
  std::vector<BioesTag> tag_sentence(const std::vector<text::Token>& tokens) const;

  // Per-token logits (eval mode); exposed for decoding diagnostics and tests.
  std::vector<nn::Vec> score_tokens(const std::vector<text::Token>& tokens) const;

  const NerConfig& config() const { return cfg_; }
  const embed::Vocabulary& vocab() const { return vocab_; }
  const std::vector<char32_t>& char_vocab() const { return char_vocab_; }
  nn::ParamSet& params() { return params_; }
  const nn::ParamSet& params() const { return params_; }

  void save(const std::string& checkpoint_path, const std::string& sidecar_path) const;
  static std::unique_ptr<NerModel> load(const std::string& checkpoint_path,
                                        const std::string& sidecar_path);

  struct TrainStats {
    std::vector<double> epoch_loss;
  };
  TrainStats train(const std::vector<SentenceExample>& sentences, const TrainConfig& tc);

 private:
  friend struct NerGradientProbe;
  struct SentenceCache;

  std::vector<nn::Vec> forward_sentence(const std::vector<text::Token>& tokens,
                                        SentenceCache* cache) const;
  double backward_sentence(const SentenceCache& cache, const std::vector<BioesTag>& gold);
  size_t char_index(char32_t c) const;

  embed::Vocabulary vocab_;
  std::vector<char32_t> char_vocab_;  // sorted; index 0 reserved for UNK
  NerConfig cfg_;
  nn::ParamSet params_;
  nn::Param* word_embedding_ = nullptr;
  nn::Param* char_embedding_ = nullptr;
  nn::Param* transitions_ = nullptr;  // 13x13 score matrix for viterbi mode
  nn::BiLstm char_encoder_;
  nn::BiLstm token_encoder_;
  nn::Dense projection_;
};

// Character inventory of the training data, sorted, with slot 0 as UNK.
std::vector<char32_t> build_char_vocab(const std::vector<SentenceExample>& sentences);

// Gold BIOES encoding: entity spans map to tokens by overlap (a partially
// overlapping token counts as inside).
std::vector<BioesTag> encode_tags(const std::vector<corpus::EntitySpan>& spans,
                                  const std::vector<text::Token>& tokens);

// Tag sequence back to spans. Valid sequences decode directly; invalid ones
// are repaired: R1 - an I-x/E-x with no open span of type x starts a new
// span; R2 - an open span is closed at the last token of its own type.
std::vector<corpus::EntitySpan> decode_spans(const std::vector<BioesTag>& tags,
                                             const std::vector<text::Token>& tokens,
                                             const std::string& full_text);

// Viterbi over emission log-probabilities plus transition scores, with
// invalid BIOES transitions excluded.
std::vector<BioesTag> viterbi_decode(const std::vector<nn::Vec>& logits,
                                     const nn::Tensor& transitions);

// Report-level k-fold cross-validation; token-level metrics pooled over all
// folds, BIOES collapsed to entity type.
struct CvResult {
  std::map<std::string, eval::Metrics> per_type;
  eval::Metrics micro;
};
CvResult cross_validate(const embed::Vocabulary& vocab, const nn::Tensor& pretrained,
                        const NerConfig& cfg, const TrainConfig& tc,
                        const std::vector<SentenceExample>& sentences, size_t folds,
                        uint64_t seed);

}  // namespace radrec::ner
