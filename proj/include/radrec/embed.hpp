#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "radrec/nn.hpp"

namespace radrec::embed {

// Token inventory with UNK/PAD specials at fixed slots. Ordering is by
// descending count, ties lexicographic, so construction is deterministic.
class Vocabulary {
 public:
  static constexpr size_t kPad = 0;
  static constexpr size_t kUnk = 1;

  static Vocabulary build(const std::vector<std::string>& tokens, size_t min_count);

  size_t size() const { return index_to_token_.size(); }
  size_t lookup(const std::string& token) const;  // kUnk for unknown tokens
  std::optional<size_t> find(const std::string& token) const;
  const std::string& token(size_t index) const { return index_to_token_[index]; }
  uint64_t count(size_t index) const { return counts_[index]; }
  const std::vector<std::string>& tokens() const { return index_to_token_; }

  // Fingerprint over the ordered token list; model sidecars carry this so
  // mismatched checkpoints are rejected at load time.
  std::string hash() const;

  static Vocabulary from_tokens(std::vector<std::string> ordered_tokens);

 private:
  std::vector<std::string> index_to_token_;
  std::vector<uint64_t> counts_;
  std::unordered_map<std::string, size_t> token_to_index_;
};

struct SkipgramConfig {
  size_t dim = 50;          // 300 for full runs
  size_t window = 5;
  size_t negatives = 5;
  size_t min_count = 2;
  size_t epochs = 5;
  double lr = 0.025;
  double min_lr = 0.0001;   // linear decay target
  uint64_t seed = 1;
};

struct SkipgramResult {
  Vocabulary vocab;
  nn::Tensor embeddings;            // [vocab_size, dim]
  std::vector<double> epoch_loss;   // mean negative-sampling loss per epoch
};

// Skip-gram with negative sampling over pre-tokenized sentences.
// Single-threaded and fully deterministic under the seed.
SkipgramResult train_skipgram(const std::vector<std::vector<std::string>>& sentences,
                              const SkipgramConfig& config);

// Text format: "N d" header, then one "token v1 ... vd" line per token.
void write_embeddings(std::ostream& out, const Vocabulary& vocab, const nn::Tensor& embeddings);
struct LoadedEmbeddings {
  Vocabulary vocab;
  nn::Tensor embeddings;
};
LoadedEmbeddings read_embeddings(std::istream& in);

double cosine(const nn::Tensor& embeddings, size_t a, size_t b);

}  // namespace radrec::embed
