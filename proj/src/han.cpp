#include "radrec/han.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace radrec::han {

using nn::Vec;
using nlohmann::json;

struct HanModel::ReportCache {
  struct SentenceCache {
    std::vector<size_t> token_ids;
    nn::BiGruCache word_cache;
    nn::AttnCache attn_cache;
    std::vector<uint8_t> vec_mask;  // dropout mask over the sentence vector
  };
  std::vector<SentenceCache> sentences;
  std::vector<Vec> sentence_vecs_dropped;
  nn::BiGruCache sentence_cache;
  std::vector<std::vector<uint8_t>> ctx_masks;
  std::vector<nn::DenseCache> head_caches;
  std::vector<Vec> logits;
};

struct HanModel::ForwardOut {
  std::vector<Vec> logits;  // one 2-vector per sentence
  size_t truncated_sentences = 0;
  bool truncated_report = false;
};

HanModel::HanModel(embed::Vocabulary vocab, const nn::Tensor& pretrained, HanConfig config)
    : vocab_(std::move(vocab)), cfg_(config) {
  if (pretrained.rows() != vocab_.size())
    throw std::invalid_argument("embedding rows do not match vocabulary size");
  const size_t embed_dim = pretrained.cols();
  if (cfg_.attn_dim == 0) cfg_.attn_dim = 2 * cfg_.word_hidden;

  embedding_ = &params_.add("embedding", {vocab_.size(), embed_dim});
  embedding_->value = pretrained;
  word_encoder_ = nn::BiGru(params_, "word_enc", embed_dim, cfg_.word_hidden);
  word_attention_ = nn::AttentionPool(params_, "word_attn", 2 * cfg_.word_hidden, cfg_.attn_dim);
  sentence_encoder_ = nn::BiGru(params_, "sent_enc", 2 * cfg_.word_hidden, cfg_.sent_hidden);
  head_ = nn::Dense(params_, "head", 2 * cfg_.sent_hidden, 2);
}

static std::vector<size_t> to_ids(const embed::Vocabulary& vocab,
                                  const std::vector<std::string>& tokens, size_t max_tokens,
                                  bool* truncated) {
  std::vector<size_t> ids;
  size_t n = tokens.size();
  if (n > max_tokens) {
    n = max_tokens;
    if (truncated) *truncated = true;
  }
  ids.reserve(std::max<size_t>(n, 1));
  for (size_t i = 0; i < n; ++i) ids.push_back(vocab.lookup(tokens[i]));
  if (ids.empty()) ids.push_back(embed::Vocabulary::kPad);
  return ids;
}

HanModel::ForwardOut HanModel::forward_report(
    const std::vector<std::vector<std::string>>& sentences, nn::Mode mode, Rng* dropout_rng,
    ReportCache* cache) const {
  if (sentences.empty()) throw std::invalid_argument("classify_report: report has no sentences");

  ForwardOut out;
  size_t n_sentences = sentences.size();
  if (n_sentences > cfg_.max_sentences) {
    n_sentences = cfg_.max_sentences;
    out.truncated_report = true;
  }

  const size_t embed_dim = embedding_->value.cols();
  std::vector<Vec> sentence_vecs(n_sentences);
  if (cache) cache->sentences.resize(n_sentences);

  for (size_t s = 0; s < n_sentences; ++s) {
    bool trunc = false;
    std::vector<size_t> ids = to_ids(vocab_, sentences[s], cfg_.max_tokens, &trunc);
    if (trunc) out.truncated_sentences++;

    std::vector<Vec> embedded(ids.size());
    for (size_t t = 0; t < ids.size(); ++t) {
      const double* row = &embedding_->value.data[ids[t] * embed_dim];
      embedded[t].assign(row, row + embed_dim);
    }

    auto* sc = cache ? &cache->sentences[s] : nullptr;
    std::vector<Vec> encoded =
        word_encoder_.forward(embedded, sc ? &sc->word_cache : nullptr);
    Vec pooled = word_attention_.forward(encoded, sc ? &sc->attn_cache : nullptr);

    if (mode == nn::Mode::Train && dropout_rng) {
      pooled = nn::dropout(pooled, cfg_.dropout, mode, *dropout_rng, sc ? &sc->vec_mask : nullptr);
    }
    if (sc) sc->token_ids = std::move(ids);
    sentence_vecs[s] = std::move(pooled);
  }

  if (cache) cache->sentence_vecs_dropped = sentence_vecs;
  std::vector<Vec> contexts =
      sentence_encoder_.forward(sentence_vecs, cache ? &cache->sentence_cache : nullptr);

  out.logits.resize(n_sentences);
  if (cache) {
    cache->ctx_masks.resize(n_sentences);
    cache->head_caches.resize(n_sentences);
  }
  for (size_t s = 0; s < n_sentences; ++s) {
    Vec ctx = contexts[s];
    if (mode == nn::Mode::Train && dropout_rng) {
      ctx = nn::dropout(ctx, cfg_.dropout, mode, *dropout_rng,
                        cache ? &cache->ctx_masks[s] : nullptr);
    }
    out.logits[s] = head_.forward(ctx, cache ? &cache->head_caches[s] : nullptr);
  }
  if (cache) cache->logits = out.logits;
  return out;
}

double HanModel::backward_report(const ReportCache& cache, const std::vector<int>& labels) {
  const size_t n = cache.logits.size();
  const double inv_n = 1.0 / double(n);
  Vec class_weights = {1.0, cfg_.positive_weight};

  double loss = 0.0;
  std::vector<Vec> dcontexts(n);
  for (size_t s = 0; s < n; ++s) {
    auto xent = nn::softmax_xent(cache.logits[s], size_t(labels[s]), &class_weights);
    loss += xent.loss * inv_n;
    for (double& g : xent.grad) g *= inv_n;
    Vec dctx = head_.backward(cache.head_caches[s], xent.grad);
    if (!cache.ctx_masks[s].empty()) {
      dctx = nn::dropout_backward(dctx, cfg_.dropout, cache.ctx_masks[s]);
    }
    dcontexts[s] = std::move(dctx);
  }

  std::vector<Vec> dsent_vecs = sentence_encoder_.backward(cache.sentence_cache, dcontexts);

  const size_t embed_dim = embedding_->value.cols();
  for (size_t s = 0; s < n; ++s) {
    Vec dvec = dsent_vecs[s];
    const auto& sc = cache.sentences[s];
    if (!sc.vec_mask.empty()) dvec = nn::dropout_backward(dvec, cfg_.dropout, sc.vec_mask);
    std::vector<Vec> dencoded = word_attention_.backward(sc.attn_cache, dvec);
    std::vector<Vec> dembedded = word_encoder_.backward(sc.word_cache, dencoded);
    for (size_t t = 0; t < sc.token_ids.size(); ++t) {
      double* gr = &embedding_->grad.data[sc.token_ids[t] * embed_dim];
      for (size_t k = 0; k < embed_dim; ++k) gr[k] += dembedded[t][k];
    }
  }
  return loss;
}

std::pair<Vec, Vec> HanModel::encode_sentence(const std::vector<std::string>& tokens) const {
  if (tokens.empty()) throw std::invalid_argument("encode_sentence: empty token list");
  bool trunc = false;
  std::vector<size_t> ids = to_ids(vocab_, tokens, cfg_.max_tokens, &trunc);
  const size_t embed_dim = embedding_->value.cols();
  std::vector<Vec> embedded(ids.size());
  for (size_t t = 0; t < ids.size(); ++t) {
    const double* row = &embedding_->value.data[ids[t] * embed_dim];
    embedded[t].assign(row, row + embed_dim);
  }
  std::vector<Vec> encoded = word_encoder_.forward(embedded);
  Vec alpha;
  Vec pooled = word_attention_.forward(encoded, nullptr, &alpha);
  return {pooled, alpha};
}

std::vector<SentencePrediction> HanModel::classify_report(
    const std::vector<std::vector<std::string>>& sentences) const {
  ForwardOut out = forward_report(sentences, nn::Mode::Eval, nullptr, nullptr);
  std::vector<SentencePrediction> preds(out.logits.size());
  for (size_t s = 0; s < out.logits.size(); ++s) {
    Vec p = nn::softmax(out.logits[s]);
    preds[s] = SentencePrediction{s, p[1], p[1] >= cfg_.threshold};
  }
  // Truncated trailing sentences are reported as negatives so output order
  // and length always match the input.
  for (size_t s = out.logits.size(); s < sentences.size(); ++s) {
    preds.push_back(SentencePrediction{s, 0.0, false});
  }
  return preds;
}

double validation_f1(const HanModel& model, const std::vector<ReportExample>& reports,
                     double threshold) {
  uint64_t tp = 0, fp = 0, fn = 0;
  for (const ReportExample& r : reports) {
    auto preds = model.classify_report(r.sentences);
    for (size_t s = 0; s < preds.size(); ++s) {
      bool pos = preds[s].probability >= threshold;
      bool gold = r.labels[s] != 0;
      if (pos && gold) tp++;
      if (pos && !gold) fp++;
      if (!pos && gold) fn++;
    }
  }
  if (tp == 0) return 0.0;
  double prec = double(tp) / double(tp + fp);
  double rec = double(tp) / double(tp + fn);
  return 2.0 * prec * rec / (prec + rec);
}

eval::ConfusionCounts evaluate_sentence_model(const HanModel& model,
                                              const std::vector<ReportExample>& test_set,
                                              double threshold) {
  eval::ConfusionCounts c;
  for (const ReportExample& r : test_set) {
    auto preds = model.classify_report(r.sentences);
    for (size_t s = 0; s < preds.size(); ++s) {
      bool pos = preds[s].probability >= threshold;
      bool gold = r.labels[s] != 0;
      if (pos && gold) c.tp++;
      else if (pos && !gold) c.fp++;
      else if (!pos && gold) c.fn++;
      else c.tn++;
    }
  }
  return c;
}

TrainResult HanModel::train(const std::vector<ReportExample>& corpus, const TrainConfig& tc) {
  size_t positives = 0, negatives = 0;
  for (const auto& r : corpus) {
    if (r.labels.size() != r.sentences.size())
      throw std::invalid_argument("train: labels not aligned with sentences");
    for (int l : r.labels) (l ? positives : negatives)++;
  }
  if (positives == 0 || negatives == 0)
    throw std::invalid_argument("train: corpus must contain both classes");

  Rng rng(tc.seed);

  // Re-initialize everything except the pretrained embedding.
  nn::Tensor keep_embedding = embedding_->value;
  nn::init_params_xavier(params_, rng);
  embedding_->value = std::move(keep_embedding);
  for (auto& [_, p] : params_.entries()) {
    p.grad.fill(0.0);
    p.m.fill(0.0);
    p.v.fill(0.0);
  }

  // Report-level 0.9/0.1 split.
  std::vector<size_t> order = rng.permutation(corpus.size());
  size_t n_val = std::max<size_t>(1, size_t(std::llround(tc.val_fraction * double(corpus.size()))));
  if (n_val >= corpus.size()) n_val = corpus.size() - 1;
  std::vector<const ReportExample*> train_set, val_set;
  for (size_t i = 0; i < order.size(); ++i) {
    if (i < order.size() - n_val) {
      train_set.push_back(&corpus[order[i]]);
    } else {
      val_set.push_back(&corpus[order[i]]);
    }
  }

  nn::AdamConfig adam{tc.lr, 0.9, 0.999, 1e-8};
  TrainResult result;
  double best_f1 = -1.0;
  size_t best_epoch = 0;
  std::map<std::string, nn::Tensor> best_weights;
  uint64_t step = 0;
  Rng dropout_rng = rng.fork(0x9d0u);

  for (size_t epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    std::vector<size_t> idx = rng.permutation(train_set.size());
    double loss_sum = 0.0;
    for (size_t i : idx) {
      const ReportExample& r = *train_set[i];
      ReportCache cache;
      ForwardOut fwd = forward_report(r.sentences, nn::Mode::Train, &dropout_rng, &cache);
      result.truncated_sentences += fwd.truncated_sentences;
      if (fwd.truncated_report) result.truncated_reports++;
      std::vector<int> labels(r.labels.begin(), r.labels.begin() + long(fwd.logits.size()));
      params_.zero_grads();
      loss_sum += backward_report(cache, labels);
      if (tc.clip_norm > 0.0) nn::clip_grad_norm(params_, tc.clip_norm);
      nn::adam_step(params_, adam, ++step);
    }

    double f1 = 0.0;
    {
      uint64_t tp = 0, fp = 0, fn = 0;
      for (const ReportExample* r : val_set) {
        auto preds = classify_report(r->sentences);
        for (size_t s = 0; s < preds.size(); ++s) {
          bool pos = preds[s].probability >= cfg_.threshold;
          bool gold = r->labels[s] != 0;
          if (pos && gold) tp++;
          if (pos && !gold) fp++;
          if (!pos && gold) fn++;
        }
      }
      if (tp > 0) {
        double prec = double(tp) / double(tp + fp);
        double rec = double(tp) / double(tp + fn);
        f1 = 2.0 * prec * rec / (prec + rec);
      }
    }

    result.history.push_back(
        EpochStats{epoch, train_set.empty() ? 0.0 : loss_sum / double(train_set.size()), f1});

    if (f1 > best_f1) {
      best_f1 = f1;
      best_epoch = epoch;
      best_weights = params_.snapshot_values();
    }
    if (epoch - best_epoch >= tc.patience) break;
  }

  if (!best_weights.empty()) params_.restore_values(best_weights);
  result.best_epoch = best_epoch;
  result.best_val_f1 = best_f1 < 0 ? 0.0 : best_f1;
  return result;
}

void HanModel::save(const std::string& checkpoint_path, const std::string& sidecar_path) const {
  nn::save_checkpoint(params_, checkpoint_path);
  json side;
  side["model"] = "han";
  side["format_version"] = 1;
  side["embed_dim"] = embedding_->value.cols();
  side["word_hidden"] = cfg_.word_hidden;
  side["sent_hidden"] = cfg_.sent_hidden;
  side["attn_dim"] = cfg_.attn_dim;
  side["dropout"] = cfg_.dropout;
  side["max_tokens"] = cfg_.max_tokens;
  side["max_sentences"] = cfg_.max_sentences;
  side["threshold"] = cfg_.threshold;
  side["positive_weight"] = cfg_.positive_weight;
  side["vocab_hash"] = vocab_.hash();
  side["vocab"] = vocab_.tokens();
  std::ofstream out(sidecar_path);
  if (!out) throw std::runtime_error("cannot write sidecar: " + sidecar_path);
  out << side.dump(2) << '\n';
}

std::unique_ptr<HanModel> HanModel::load(const std::string& checkpoint_path,
                                         const std::string& sidecar_path) {
  std::ifstream in(sidecar_path);
  if (!in) throw std::runtime_error("cannot read sidecar: " + sidecar_path);
  json side = json::parse(in);
  if (side.value("model", "") != "han")
    throw std::runtime_error("sidecar is not a sentence-classifier model: " + sidecar_path);

  HanConfig cfg;
  cfg.word_hidden = side.at("word_hidden").get<size_t>();
  cfg.sent_hidden = side.at("sent_hidden").get<size_t>();
  cfg.attn_dim = side.at("attn_dim").get<size_t>();
  cfg.dropout = side.at("dropout").get<double>();
  cfg.max_tokens = side.at("max_tokens").get<size_t>();
  cfg.max_sentences = side.at("max_sentences").get<size_t>();
  cfg.threshold = side.at("threshold").get<double>();
  cfg.positive_weight = side.at("positive_weight").get<double>();

  auto vocab = embed::Vocabulary::from_tokens(side.at("vocab").get<std::vector<std::string>>());
  size_t embed_dim = side.at("embed_dim").get<size_t>();
  nn::Tensor emb = nn::Tensor::zeros({vocab.size(), embed_dim});
  auto model = std::make_unique<HanModel>(std::move(vocab), emb, cfg);
  nn::load_checkpoint(model->params_, checkpoint_path);
  return model;
}

}  // namespace radrec::han
