#include "radrec/embed.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "radrec/hash.hpp"

namespace radrec::embed {

Vocabulary Vocabulary::build(const std::vector<std::string>& tokens, size_t min_count) {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
  std::map<std::string, uint64_t> counts;
  for (const std::string& t : tokens) counts[t]++;

  std::vector<std::pair<std::string, uint64_t>> kept;
  for (const auto& [tok, n] : counts) {
    if (n >= min_count) kept.emplace_back(tok, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  v.index_to_token_ = {"<PAD>", "<UNK>"};
  v.counts_ = {0, 0};
  for (auto& [tok, n] : kept) {
    v.token_to_index_.emplace(tok, v.index_to_token_.size());
    v.index_to_token_.push_back(tok);
    v.counts_.push_back(n);
  }
  return v;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> ordered_tokens) {
  Vocabulary v;
  v.index_to_token_ = std::move(ordered_tokens);
  v.counts_.assign(v.index_to_token_.size(), 0);
  for (size_t i = 2; i < v.index_to_token_.size(); ++i) {
    v.token_to_index_.emplace(v.index_to_token_[i], i);
  }
  if (v.index_to_token_.size() < 2 || v.index_to_token_[0] != "<PAD>" ||
      v.index_to_token_[1] != "<UNK>")
    throw std::invalid_argument("vocabulary must start with <PAD>, <UNK>");
  return v;
}

size_t Vocabulary::lookup(const std::string& token) const {
  auto it = token_to_index_.find(token);
  return it == token_to_index_.end() ? kUnk : it->second;
}

std::optional<size_t> Vocabulary::find(const std::string& token) const {
  auto it = token_to_index_.find(token);
  if (it == token_to_index_.end()) return std::nullopt;
  return it->second;
}

std::string Vocabulary::hash() const {
  Fnv1a h;
  for (const std::string& t : index_to_token_) {
    h.update(t);
    h.update("\n", 1);
  }
  return h.hex();
}

static double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

SkipgramResult train_skipgram(const std::vector<std::vector<std::string>>& sentences,
                              const SkipgramConfig& cfg) {
  if (cfg.dim < 2) throw std::invalid_argument("embedding dimension must be >= 2");

  std::vector<std::string> all;
  for (const auto& s : sentences) all.insert(all.end(), s.begin(), s.end());

  SkipgramResult result;
  result.vocab = Vocabulary::build(all, cfg.min_count);
  const Vocabulary& vocab = result.vocab;
  const size_t V = vocab.size(), D = cfg.dim;

  // In-vocabulary token ids per sentence; OOV positions are dropped from
  // training (they would only train the UNK row against noise).
  std::vector<std::vector<size_t>> ids;
  size_t usable = 0;
  for (const auto& s : sentences) {
    std::vector<size_t> row;
    for (const std::string& t : s) {
      if (auto idx = vocab.find(t)) row.push_back(*idx);
    }
    usable += row.size();
    if (row.size() >= 2) ids.push_back(std::move(row));
  }
  if (usable < 2) throw std::invalid_argument("corpus too short to train embeddings");

  Rng rng(cfg.seed);
  nn::Tensor syn0 = nn::Tensor::zeros({V, D});  // input vectors (the embeddings)
  nn::Tensor syn1 = nn::Tensor::zeros({V, D});  // output vectors
  for (double& v : syn0.data) v = rng.uniform(-0.5 / double(D), 0.5 / double(D));

  // Unigram table with the usual 3/4 power for negative sampling.
  const size_t kTableSize = 1 << 17;
  std::vector<uint32_t> table(kTableSize);
  {
    double total = 0.0;
    for (size_t i = 2; i < V; ++i) total += std::pow(double(vocab.count(i)), 0.75);
    if (total == 0.0) total = 1.0;
    size_t i = 2;
    double cum = std::pow(double(vocab.count(i)), 0.75) / total;
    for (size_t k = 0; k < kTableSize; ++k) {
      table[k] = uint32_t(i);
      if (double(k + 1) / double(kTableSize) > cum && i + 1 < V) {
        ++i;
        cum += std::pow(double(vocab.count(i)), 0.75) / total;
      }
    }
  }

  // Count of (center, context) pairs per epoch for the linear lr schedule.
  size_t pairs_per_epoch = 0;
  for (const auto& row : ids) {
    for (size_t c = 0; c < row.size(); ++c) {
      size_t lo = c >= cfg.window ? c - cfg.window : 0;
      size_t hi = std::min(row.size(), c + cfg.window + 1);
      pairs_per_epoch += (hi - lo - 1);
    }
  }
  const size_t total_pairs = std::max<size_t>(1, pairs_per_epoch * cfg.epochs);

  // Negative samples are drawn from a stream that restarts identically at
  // every epoch, so training performs SGD passes over one fixed objective
  // and the recorded per-epoch loss is that same objective.
  const uint64_t stream_seed = cfg.seed ^ 0x5eedf00dULL;
  auto evaluate = [&]() {
    Rng eval_rng(stream_seed);
    double loss_sum = 0.0;
    size_t loss_n = 0;
    for (const auto& row : ids) {
      for (size_t c = 0; c < row.size(); ++c) {
        const double* vc = &syn0.data[row[c] * D];
        size_t lo = c >= cfg.window ? c - cfg.window : 0;
        size_t hi = std::min(row.size(), c + cfg.window + 1);
        for (size_t j = lo; j < hi; ++j) {
          if (j == c) continue;
          for (size_t neg = 0; neg <= cfg.negatives; ++neg) {
            size_t target = neg == 0 ? row[j] : table[eval_rng.index(kTableSize)];
            if (neg > 0 && target == row[j]) continue;
            const double* vo = &syn1.data[target * D];
            double score = 0.0;
            for (size_t k = 0; k < D; ++k) score += vc[k] * vo[k];
            double p = sigmoid(score);
            loss_sum += neg == 0 ? -std::log(std::max(p, 1e-12))
                                 : -std::log(std::max(1.0 - p, 1e-12));
          }
          ++loss_n;
        }
      }
    }
    return loss_n ? loss_sum / double(loss_n) : 0.0;
  };

  std::vector<double> grad_center(D);
  size_t processed = 0;
  for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng epoch_rng(stream_seed);
    for (const auto& row : ids) {
      for (size_t c = 0; c < row.size(); ++c) {
        const size_t center = row[c];
        double* vc = &syn0.data[center * D];
        size_t lo = c >= cfg.window ? c - cfg.window : 0;
        size_t hi = std::min(row.size(), c + cfg.window + 1);
        for (size_t j = lo; j < hi; ++j) {
          if (j == c) continue;
          const double lr =
              std::max(cfg.min_lr, cfg.lr * (1.0 - double(processed) / double(total_pairs)));
          ++processed;

          std::fill(grad_center.begin(), grad_center.end(), 0.0);
          for (size_t neg = 0; neg <= cfg.negatives; ++neg) {
            size_t target;
            double label;
            if (neg == 0) {
              target = row[j];
              label = 1.0;
            } else {
              target = table[epoch_rng.index(kTableSize)];
              if (target == row[j]) continue;
              label = 0.0;
            }
            double* vo = &syn1.data[target * D];
            double score = 0.0;
            for (size_t k = 0; k < D; ++k) score += vc[k] * vo[k];
            double p = sigmoid(score);
            double g = (p - label) * lr;
            for (size_t k = 0; k < D; ++k) {
              grad_center[k] += g * vo[k];
              vo[k] -= g * vc[k];
            }
          }
          for (size_t k = 0; k < D; ++k) vc[k] -= grad_center[k];
        }
      }
    }
    result.epoch_loss.push_back(evaluate());
  }

  result.embeddings = std::move(syn0);
  return result;
}

void write_embeddings(std::ostream& out, const Vocabulary& vocab, const nn::Tensor& embeddings) {
  const size_t V = embeddings.rows(), D = embeddings.cols();
  out << V << ' ' << D << '\n';
  char buf[32];
  for (size_t i = 0; i < V; ++i) {
    out << vocab.token(i);
    for (size_t k = 0; k < D; ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", embeddings.at(i, k));
      out << ' ' << buf;
    }
    out << '\n';
  }
}

LoadedEmbeddings read_embeddings(std::istream& in) {
  size_t V = 0, D = 0;
  if (!(in >> V >> D) || V < 2 || D < 1)
    throw std::runtime_error("bad embedding file header");
  std::vector<std::string> tokens(V);
  nn::Tensor emb = nn::Tensor::zeros({V, D});
  for (size_t i = 0; i < V; ++i) {
    if (!(in >> tokens[i])) throw std::runtime_error("truncated embedding file");
    for (size_t k = 0; k < D; ++k) {
      if (!(in >> emb.at(i, k))) throw std::runtime_error("truncated embedding file");
    }
  }
  LoadedEmbeddings out{Vocabulary::from_tokens(std::move(tokens)), std::move(emb)};
  return out;
}

double cosine(const nn::Tensor& embeddings, size_t a, size_t b) {
  const size_t D = embeddings.cols();
  double ab = 0, aa = 0, bb = 0;
  for (size_t k = 0; k < D; ++k) {
    double va = embeddings.at(a, k), vb = embeddings.at(b, k);
    ab += va * vb;
    aa += va * va;
    bb += vb * vb;
  }
  if (aa == 0 || bb == 0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

}  // namespace radrec::embed
