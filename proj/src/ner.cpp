#include "radrec/ner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "radrec/utf8.hpp"

namespace radrec::ner {

using nn::Vec;
using nlohmann::json;
using corpus::EntityKind;

// Tag ids: 0 = O; then per kind (reason, test, timeframe): B, I, E, S.
static const std::array<std::string, kNumTags>& tag_names() {
  static const std::array<std::string, kNumTags> names = {
      "O",
      "B-reason", "I-reason", "E-reason", "S-reason",
      "B-test", "I-test", "E-test", "S-test",
      "B-timeframe", "I-timeframe", "E-timeframe", "S-timeframe",
  };
  return names;
}

const std::string& tag_name(BioesTag t) { return tag_names()[t.id]; }

BioesTag tag_from_name(const std::string& name) {
  const auto& names = tag_names();
  for (size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return BioesTag{uint8_t(i)};
  }
  throw std::invalid_argument("unknown BIOES tag: " + name);
}

BioesTag make_tag(char prefix, EntityKind kind) {
  static const std::string order = "BIES";
  size_t p = order.find(prefix);
  if (p == std::string::npos) throw std::invalid_argument("bad BIOES prefix");
  return BioesTag{uint8_t(1 + 4 * size_t(kind) + p)};
}

bool is_outside(BioesTag t) { return t.id == 0; }

char tag_prefix(BioesTag t) {
  if (t.id == 0) return 'O';
  static const char prefixes[4] = {'B', 'I', 'E', 'S'};
  return prefixes[(t.id - 1) % 4];
}

EntityKind tag_kind(BioesTag t) { return EntityKind((t.id - 1) / 4); }

bool valid_start(BioesTag t) {
  char p = tag_prefix(t);
  return p == 'O' || p == 'B' || p == 'S';
}

bool valid_end(BioesTag t) {
  char p = tag_prefix(t);
  return p == 'O' || p == 'E' || p == 'S';
}

bool valid_transition(BioesTag from, BioesTag to) {
  char fp = tag_prefix(from), tp = tag_prefix(to);
  if (fp == 'B' || fp == 'I') {
    // must continue the same entity
    return (tp == 'I' || tp == 'E') && tag_kind(from) == tag_kind(to);
  }
  // O, E, S close anything; next must open fresh or stay outside
  return tp == 'O' || tp == 'B' || tp == 'S';
}

// --- model -------------------------------------------------------------------

struct NerModel::SentenceCache {
  struct TokenCache {
    std::vector<size_t> char_ids;
    std::vector<Vec> char_embedded;
    nn::BiLstmCache char_cache;
    size_t word_id = 0;
  };
  std::vector<TokenCache> tokens;
  std::vector<Vec> token_inputs;  // concat(word_emb, char_vec) after dropout
  std::vector<std::vector<uint8_t>> input_masks;
  nn::BiLstmCache token_cache;
  std::vector<nn::DenseCache> proj_caches;
  std::vector<Vec> logits;
};

NerModel::NerModel(embed::Vocabulary vocab, const nn::Tensor& pretrained,
                   std::vector<char32_t> char_vocab, NerConfig config)
    : vocab_(std::move(vocab)), char_vocab_(std::move(char_vocab)), cfg_(config) {
  if (pretrained.rows() != vocab_.size())
    throw std::invalid_argument("embedding rows do not match vocabulary size");
  if (char_vocab_.empty() || char_vocab_[0] != 0)
    throw std::invalid_argument("char vocabulary must reserve slot 0 for UNK");
  const size_t embed_dim = pretrained.cols();

  word_embedding_ = &params_.add("word_embedding", {vocab_.size(), embed_dim});
  word_embedding_->value = pretrained;
  char_embedding_ = &params_.add("char_embedding", {char_vocab_.size(), cfg_.char_embed_dim});
  char_encoder_ = nn::BiLstm(params_, "char_enc", cfg_.char_embed_dim, cfg_.char_hidden);
  token_encoder_ =
      nn::BiLstm(params_, "token_enc", embed_dim + 2 * cfg_.char_hidden, cfg_.word_hidden);
  projection_ = nn::Dense(params_, "proj", 2 * cfg_.word_hidden, kNumTags);
  transitions_ = &params_.add("transitions", {kNumTags, kNumTags});
}

size_t NerModel::char_index(char32_t c) const {
  auto it = std::lower_bound(char_vocab_.begin() + 1, char_vocab_.end(), c);
  if (it != char_vocab_.end() && *it == c) return size_t(it - char_vocab_.begin());
  return 0;  // UNK
}

Vec NerModel::char_encode(const std::string& surface) const {
  if (surface.empty()) throw std::invalid_argument("char_encode: empty token");
  std::vector<char32_t> cps = utf8::decode_all(surface);
  std::vector<Vec> embedded(cps.size());
  const size_t D = cfg_.char_embed_dim;
  for (size_t i = 0; i < cps.size(); ++i) {
    const double* row = &char_embedding_->value.data[char_index(cps[i]) * D];
    embedded[i].assign(row, row + D);
  }
  return char_encoder_.encode_final(embedded);
}

std::vector<Vec> NerModel::forward_sentence(const std::vector<text::Token>& tokens,
                                            SentenceCache* cache) const {
  if (tokens.empty()) throw std::invalid_argument("tag_sentence: empty token list");
  const size_t T = tokens.size();
  const size_t word_dim = word_embedding_->value.cols();
  const size_t char_dim = cfg_.char_embed_dim;

  if (cache) cache->tokens.resize(T);
  std::vector<Vec> inputs(T);
  for (size_t t = 0; t < T; ++t) {
    const text::Token& tok = tokens[t];
    std::vector<char32_t> cps = utf8::decode_all(tok.surface.empty() ? "?" : tok.surface);
    std::vector<size_t> char_ids(cps.size());
    std::vector<Vec> char_embedded(cps.size());
    for (size_t i = 0; i < cps.size(); ++i) {
      char_ids[i] = char_index(cps[i]);
      const double* row = &char_embedding_->value.data[char_ids[i] * char_dim];
      char_embedded[i].assign(row, row + char_dim);
    }
    auto* tcache = cache ? &cache->tokens[t] : nullptr;
    Vec char_vec =
        char_encoder_.encode_final(char_embedded, tcache ? &tcache->char_cache : nullptr);

    size_t word_id = vocab_.lookup(tok.norm);
    const double* wrow = &word_embedding_->value.data[word_id * word_dim];
    Vec input(wrow, wrow + word_dim);
    input.insert(input.end(), char_vec.begin(), char_vec.end());

    if (tcache) {
      tcache->char_ids = std::move(char_ids);
      tcache->char_embedded = std::move(char_embedded);
      tcache->word_id = word_id;
    }
    inputs[t] = std::move(input);
  }

  if (cache) cache->token_inputs = inputs;
  std::vector<Vec> encoded = token_encoder_.forward(inputs, cache ? &cache->token_cache : nullptr);

  std::vector<Vec> logits(T);
  if (cache) cache->proj_caches.resize(T);
  for (size_t t = 0; t < T; ++t) {
    logits[t] = projection_.forward(encoded[t], cache ? &cache->proj_caches[t] : nullptr);
  }
  if (cache) cache->logits = logits;
  return logits;
}

double NerModel::backward_sentence(const SentenceCache& cache, const std::vector<BioesTag>& gold) {
  const size_t T = cache.logits.size();
  const double inv_t = 1.0 / double(T);
  const size_t word_dim = word_embedding_->value.cols();
  const size_t char_dim = cfg_.char_embed_dim;

  double loss = 0.0;
  std::vector<Vec> dencoded(T);
  for (size_t t = 0; t < T; ++t) {
    auto xent = nn::softmax_xent(cache.logits[t], gold[t].id);
    loss += xent.loss * inv_t;
    for (double& g : xent.grad) g *= inv_t;
    dencoded[t] = projection_.backward(cache.proj_caches[t], xent.grad);
  }

  std::vector<Vec> dinputs = token_encoder_.backward(cache.token_cache, dencoded);

  for (size_t t = 0; t < T; ++t) {
    const auto& tcache = cache.tokens[t];
    // word embedding rows
    double* wgrad = &word_embedding_->grad.data[tcache.word_id * word_dim];
    for (size_t k = 0; k < word_dim; ++k) wgrad[k] += dinputs[t][k];
    // char path
    Vec dchar(dinputs[t].begin() + long(word_dim), dinputs[t].end());
    std::vector<Vec> dchar_embedded = char_encoder_.backward_final(tcache.char_cache, dchar);
    for (size_t i = 0; i < tcache.char_ids.size(); ++i) {
      double* cgrad = &char_embedding_->grad.data[tcache.char_ids[i] * char_dim];
      for (size_t k = 0; k < char_dim; ++k) cgrad[k] += dchar_embedded[i][k];
    }
  }
  return loss;
}

std::vector<Vec> NerModel::score_tokens(const std::vector<text::Token>& tokens) const {
  return forward_sentence(tokens, nullptr);
}

std::vector<BioesTag> NerModel::tag_sentence(const std::vector<text::Token>& tokens,
                                             DecodeMode mode) const {
  std::vector<Vec> logits = forward_sentence(tokens, nullptr);
  if (mode == DecodeMode::Viterbi) return viterbi_decode(logits, transitions_->value);
  std::vector<BioesTag> tags(logits.size());
  for (size_t t = 0; t < logits.size(); ++t) {
    size_t best = size_t(std::max_element(logits[t].begin(), logits[t].end()) - logits[t].begin());
    tags[t] = BioesTag{uint8_t(best)};
  }
  return tags;
}

std::vector<BioesTag> NerModel::tag_sentence(const std::vector<text::Token>& tokens) const {
  return tag_sentence(tokens, cfg_.decode_mode);
}

std::vector<BioesTag> viterbi_decode(const std::vector<Vec>& logits,
                                     const nn::Tensor& transitions) {
  const size_t T = logits.size(), K = kNumTags;
  constexpr double kNegInf = -1e30;

  // Emissions as log-probabilities so scores are comparable across modes.
  auto log_probs = [](const Vec& l) {
    Vec p = nn::softmax(l);
    for (double& v : p) v = std::log(std::max(v, 1e-300));
    return p;
  };

  std::vector<Vec> delta(T, Vec(K, kNegInf));
  std::vector<std::vector<int>> back(T, std::vector<int>(K, -1));

  Vec e0 = log_probs(logits[0]);
  for (size_t k = 0; k < K; ++k) {
    if (valid_start(BioesTag{uint8_t(k)})) delta[0][k] = e0[k];
  }
  for (size_t t = 1; t < T; ++t) {
    Vec e = log_probs(logits[t]);
    for (size_t k = 0; k < K; ++k) {
      double best = kNegInf;
      int arg = -1;
      for (size_t j = 0; j < K; ++j) {
        if (delta[t - 1][j] <= kNegInf) continue;
        if (!valid_transition(BioesTag{uint8_t(j)}, BioesTag{uint8_t(k)})) continue;
        double s = delta[t - 1][j] + transitions.at(j, k);
        if (s > best) {
          best = s;
          arg = int(j);
        }
      }
      if (arg >= 0) {
        delta[t][k] = best + e[k];
        back[t][k] = arg;
      }
    }
  }

  double best = kNegInf;
  int arg = -1;
  for (size_t k = 0; k < K; ++k) {
    if (!valid_end(BioesTag{uint8_t(k)})) continue;
    if (delta[T - 1][k] > best) {
      best = delta[T - 1][k];
      arg = int(k);
    }
  }
  if (arg < 0) arg = 0;  // all-O is always reachable; defensive only

  std::vector<BioesTag> tags(T);
  for (size_t t = T; t-- > 0;) {
    tags[t] = BioesTag{uint8_t(arg)};
    if (t > 0) arg = back[t][size_t(arg)];
  }
  return tags;
}

std::vector<char32_t> build_char_vocab(const std::vector<SentenceExample>& sentences) {
  std::set<char32_t> chars;
  for (const auto& s : sentences) {
    for (const auto& tok : s.tokens) {
      for (char32_t c : utf8::decode_all(tok.surface)) chars.insert(c);
    }
  }
  std::vector<char32_t> out;
  out.push_back(0);  // UNK slot
  out.insert(out.end(), chars.begin(), chars.end());
  return out;
}

std::vector<BioesTag> encode_tags(const std::vector<corpus::EntitySpan>& spans,
                                  const std::vector<text::Token>& tokens) {
  std::vector<BioesTag> tags(tokens.size(), BioesTag{0});

  std::vector<corpus::EntitySpan> sorted = spans;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.begin != b.begin) return a.begin < b.begin;
    return a.end < b.end;
  });

  std::vector<bool> taken(tokens.size(), false);
  for (const corpus::EntitySpan& span : sorted) {
    std::vector<size_t> members;
    for (size_t t = 0; t < tokens.size(); ++t) {
      if (taken[t]) continue;
      if (tokens[t].begin < span.end && tokens[t].end > span.begin) members.push_back(t);
    }
    if (members.empty()) continue;
    if (members.size() == 1) {
      tags[members[0]] = make_tag('S', span.kind);
    } else {
      tags[members.front()] = make_tag('B', span.kind);
      for (size_t i = 1; i + 1 < members.size(); ++i) tags[members[i]] = make_tag('I', span.kind);
      tags[members.back()] = make_tag('E', span.kind);
    }
    for (size_t t : members) taken[t] = true;
  }
  return tags;
}

std::vector<corpus::EntitySpan> decode_spans(const std::vector<BioesTag>& tags,
                                             const std::vector<text::Token>& tokens,
                                             const std::string& full_text) {
  if (tags.size() != tokens.size())
    throw std::invalid_argument("decode_spans: tags not aligned with tokens");

  std::vector<corpus::EntitySpan> spans;
  // Open span state: type plus first/last member token.
  bool open = false;
  EntityKind open_kind = EntityKind::Reason;
  size_t first = 0, last = 0;

  auto close = [&]() {
    if (!open) return;
    corpus::EntitySpan s;
    s.kind = open_kind;
    s.begin = tokens[first].begin;
    s.end = tokens[last].end;
    s.text = utf8::slice(full_text, s.begin, s.end);
    spans.push_back(std::move(s));
    open = false;
  };

  for (size_t t = 0; t < tags.size(); ++t) {
    BioesTag tag = tags[t];
    char p = tag_prefix(tag);
    switch (p) {
      case 'O':
        close();  // R2
        break;
      case 'B':
        close();  // R2
        open = true;
        open_kind = tag_kind(tag);
        first = last = t;
        break;
      case 'S':
        close();  // R2
        open = true;
        open_kind = tag_kind(tag);
        first = last = t;
        close();
        break;
      case 'I':
        if (open && open_kind == tag_kind(tag)) {
          last = t;
        } else {
          close();  // R2
          open = true;  // R1: treat as a fresh begin
          open_kind = tag_kind(tag);
          first = last = t;
        }
        break;
      case 'E':
        if (open && open_kind == tag_kind(tag)) {
          last = t;
          close();
        } else {
          close();  // R2
          open = true;  // R1
          open_kind = tag_kind(tag);
          first = last = t;
          close();
        }
        break;
    }
  }
  close();  // R2 at sentence end
  return spans;
}

NerModel::TrainStats NerModel::train(const std::vector<SentenceExample>& sentences,
                                     const TrainConfig& tc) {
  for (const auto& s : sentences) {
    if (s.gold.size() != s.tokens.size())
      throw std::invalid_argument("train: gold tags not aligned with tokens");
    if (s.tokens.empty()) throw std::invalid_argument("train: empty sentence");
  }
  if (sentences.empty()) throw std::invalid_argument("train: no sentences");

  Rng rng(tc.seed);
  nn::Tensor keep_words = word_embedding_->value;
  nn::init_params_xavier(params_, rng);
  word_embedding_->value = std::move(keep_words);
  // Small uniform init for char embeddings, like the word2vec rows.
  for (double& v : char_embedding_->value.data)
    v = rng.uniform(-0.5 / double(cfg_.char_embed_dim), 0.5 / double(cfg_.char_embed_dim));
  transitions_->value.fill(0.0);
  for (auto& [_, p] : params_.entries()) {
    p.grad.fill(0.0);
    p.m.fill(0.0);
    p.v.fill(0.0);
  }

  nn::AdamConfig adam{tc.lr, 0.9, 0.999, 1e-8};
  TrainStats stats;
  uint64_t step = 0;
  for (size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
    std::vector<size_t> order = rng.permutation(sentences.size());
    double loss_sum = 0.0;
    for (size_t i : order) {
      const SentenceExample& ex = sentences[i];
      SentenceCache cache;
      forward_sentence(ex.tokens, &cache);
      params_.zero_grads();
      loss_sum += backward_sentence(cache, ex.gold);
      // The transition matrix has no gradient path; keep it fixed.
      transitions_->grad.fill(0.0);
      if (tc.clip_norm > 0.0) nn::clip_grad_norm(params_, tc.clip_norm);
      nn::adam_step(params_, adam, ++step);
    }
    stats.epoch_loss.push_back(loss_sum / double(sentences.size()));
  }
  return stats;
}

void NerModel::save(const std::string& checkpoint_path, const std::string& sidecar_path) const {
  nn::save_checkpoint(params_, checkpoint_path);
  json side;
  side["model"] = "ner";
  side["format_version"] = 1;
  side["embed_dim"] = word_embedding_->value.cols();
  side["char_embed_dim"] = cfg_.char_embed_dim;
  side["char_hidden"] = cfg_.char_hidden;
  side["word_hidden"] = cfg_.word_hidden;
  side["dropout"] = cfg_.dropout;
  side["decode_mode"] = cfg_.decode_mode == DecodeMode::Viterbi ? "viterbi" : "argmax";
  side["vocab_hash"] = vocab_.hash();
  side["vocab"] = vocab_.tokens();
  std::vector<uint32_t> chars(char_vocab_.begin(), char_vocab_.end());
  side["char_vocab"] = chars;
  std::ofstream out(sidecar_path);
  if (!out) throw std::runtime_error("cannot write sidecar: " + sidecar_path);
  out << side.dump(2) << '\n';
}

std::unique_ptr<NerModel> NerModel::load(const std::string& checkpoint_path,
                                         const std::string& sidecar_path) {
  std::ifstream in(sidecar_path);
  if (!in) throw std::runtime_error("cannot read sidecar: " + sidecar_path);
  json side = json::parse(in);
  if (side.value("model", "") != "ner")
    throw std::runtime_error("sidecar is not an entity-extractor model: " + sidecar_path);

  NerConfig cfg;
  cfg.char_embed_dim = side.at("char_embed_dim").get<size_t>();
  cfg.char_hidden = side.at("char_hidden").get<size_t>();
  cfg.word_hidden = side.at("word_hidden").get<size_t>();
  cfg.dropout = side.at("dropout").get<double>();
  cfg.decode_mode =
      side.value("decode_mode", "argmax") == "viterbi" ? DecodeMode::Viterbi : DecodeMode::Argmax;

  auto vocab = embed::Vocabulary::from_tokens(side.at("vocab").get<std::vector<std::string>>());
  auto chars_u32 = side.at("char_vocab").get<std::vector<uint32_t>>();
  std::vector<char32_t> chars(chars_u32.begin(), chars_u32.end());
  size_t embed_dim = side.at("embed_dim").get<size_t>();
  nn::Tensor emb = nn::Tensor::zeros({vocab.size(), embed_dim});
  auto model = std::make_unique<NerModel>(std::move(vocab), emb, std::move(chars), cfg);
  nn::load_checkpoint(model->params_, checkpoint_path);
  return model;
}

CvResult cross_validate(const embed::Vocabulary& vocab, const nn::Tensor& pretrained,
                        const NerConfig& cfg, const TrainConfig& tc,
                        const std::vector<SentenceExample>& sentences, size_t folds,
                        uint64_t seed) {
  std::set<std::string> id_set;
  for (const auto& s : sentences) id_set.insert(s.report_id);
  std::vector<std::string> ids(id_set.begin(), id_set.end());
  auto fold_ids = eval::kfold_split(ids, folds, seed);

  std::vector<std::string> gold_all, pred_all;
  for (size_t f = 0; f < folds; ++f) {
    std::set<std::string> held(fold_ids[f].begin(), fold_ids[f].end());
    std::vector<SentenceExample> train_set, test_set;
    for (const auto& s : sentences) {
      (held.count(s.report_id) ? test_set : train_set).push_back(s);
    }
    if (train_set.empty() || test_set.empty()) continue;

    std::vector<char32_t> chars = build_char_vocab(train_set);
    NerModel model(vocab, pretrained, chars, cfg);
    TrainConfig fold_tc = tc;
    fold_tc.seed = seed + f + 1;
    model.train(train_set, fold_tc);

    for (const auto& s : test_set) {
      auto tags = model.tag_sentence(s.tokens);
      for (size_t t = 0; t < tags.size(); ++t) {
        gold_all.push_back(tag_name(s.gold[t]));
        pred_all.push_back(tag_name(tags[t]));
      }
    }
  }

  CvResult result;
  result.per_type = eval::token_level_eval(gold_all, pred_all);
  result.micro = eval::confusion_to_metrics(eval::token_level_counts_pooled(gold_all, pred_all));
  // Table rows are always the three entity types even when a fold never saw one.
  for (corpus::EntityKind k :
       {EntityKind::Reason, EntityKind::Test, EntityKind::Timeframe}) {
    result.per_type.try_emplace(corpus::entity_kind_name(k));
  }
  return result;
}

}  // namespace radrec::ner
