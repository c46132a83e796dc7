#include <doctest.h>

#include <sstream>

#include "radrec/embed.hpp"
#include "radrec/rng.hpp"

using namespace radrec;
using embed::SkipgramConfig;
using embed::Vocabulary;

TEST_CASE("vocabulary excludes rare tokens and always has specials") {
  Vocabulary v = Vocabulary::build({"a", "a", "b"}, 2);
  CHECK(v.find("a").has_value());
  CHECK_FALSE(v.find("b").has_value());
  CHECK(v.token(Vocabulary::kPad) == "<PAD>");
  CHECK(v.token(Vocabulary::kUnk) == "<UNK>");
  CHECK(v.lookup("zzz") == Vocabulary::kUnk);

  Vocabulary empty = Vocabulary::build({}, 1);
  CHECK(empty.size() == 2);
}

TEST_CASE("vocabulary ordering is count-descending with lexicographic ties") {
  Vocabulary v = Vocabulary::build({"b", "b", "c", "c", "a", "a", "a", "d"}, 1);
  CHECK(v.token(2) == "a");   // count 3
  CHECK(v.token(3) == "b");   // count 2, tie broken by name
  CHECK(v.token(4) == "c");
  CHECK(v.token(5) == "d");

  Vocabulary again = Vocabulary::build({"b", "b", "c", "c", "a", "a", "a", "d"}, 1);
  CHECK(v.tokens() == again.tokens());
  CHECK(v.hash() == again.hash());
}

TEST_CASE("skipgram accepts the published dimension and is seed-deterministic") {
  std::vector<std::vector<std::string>> corpus;
  Rng rng(1);
  const std::vector<std::string> words = {"scan", "repeat", "lesion", "months", "stable"};
  for (int s = 0; s < 30; ++s) {
    std::vector<std::string> sent;
    for (int t = 0; t < 8; ++t) sent.push_back(words[rng.index(words.size())]);
    corpus.push_back(sent);
  }

  SkipgramConfig cfg;
  cfg.dim = 300;  // full-run default from the published configuration
  cfg.epochs = 1;
  cfg.min_count = 1;
  cfg.seed = 9;
  auto a = embed::train_skipgram(corpus, cfg);
  CHECK(a.embeddings.cols() == 300);

  cfg.dim = 16;
  cfg.epochs = 2;
  auto b1 = embed::train_skipgram(corpus, cfg);
  auto b2 = embed::train_skipgram(corpus, cfg);
  CHECK(b1.embeddings.data == b2.embeddings.data);
  CHECK(b1.epoch_loss == b2.epoch_loss);

  cfg.seed = 10;
  auto c = embed::train_skipgram(corpus, cfg);
  CHECK(b1.embeddings.data != c.embeddings.data);
}

TEST_CASE("co-occurring tokens end up closer than never co-occurring ones") {
  // X and Y always co-occur; Z lives in separate sentences with W.
  std::vector<std::vector<std::string>> corpus;
  for (int i = 0; i < 200; ++i) {
    corpus.push_back({"xx", "yy", "xx", "yy", "xx", "yy"});
    corpus.push_back({"zz", "ww", "zz", "ww", "zz", "ww"});
  }
  SkipgramConfig cfg;
  cfg.dim = 24;
  cfg.window = 2;
  cfg.epochs = 4;
  cfg.min_count = 1;
  cfg.seed = 3;
  auto r = embed::train_skipgram(corpus, cfg);
  size_t x = *r.vocab.find("xx"), y = *r.vocab.find("yy"), z = *r.vocab.find("zz");
  double close = embed::cosine(r.embeddings, x, y);
  double far = embed::cosine(r.embeddings, x, z);
  CHECK(close > far);
}

TEST_CASE("epoch losses are non-increasing on a fixed corpus with decaying lr") {
  std::vector<std::vector<std::string>> corpus;
  for (int i = 0; i < 100; ++i) {
    corpus.push_back({"xx", "yy", "xx", "yy", "xx", "yy"});
    corpus.push_back({"zz", "ww", "zz", "ww", "zz", "ww"});
    corpus.push_back({"aa", "bb", "cc", "aa", "bb", "cc"});
  }
  for (uint64_t seed : {11u, 12u, 13u, 99u}) {
    SkipgramConfig cfg;
    cfg.dim = 16;
    cfg.window = 2;
    cfg.epochs = 8;
    cfg.min_count = 1;
    cfg.seed = seed;
    auto r = embed::train_skipgram(corpus, cfg);
    REQUIRE(r.epoch_loss.size() == 8);
    for (size_t e = 1; e < r.epoch_loss.size(); ++e) {
      CAPTURE(seed);
      CHECK(r.epoch_loss[e] <= r.epoch_loss[e - 1] + 1e-6);
    }
  }
}

TEST_CASE("training rejects corpora that are too short") {
  CHECK_THROWS_AS(embed::train_skipgram({{"only"}}, SkipgramConfig{}), std::invalid_argument);
  SkipgramConfig bad;
  bad.dim = 1;
  CHECK_THROWS_AS(embed::train_skipgram({{"a", "b"}}, bad), std::invalid_argument);
}

TEST_CASE("embedding text file round trips") {
  std::vector<std::vector<std::string>> corpus = {{"aa", "bb", "aa", "bb", "cc", "aa"}};
  SkipgramConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 1;
  cfg.min_count = 1;
  cfg.seed = 2;
  auto r = embed::train_skipgram(corpus, cfg);

  std::stringstream file;
  embed::write_embeddings(file, r.vocab, r.embeddings);

  std::string header;
  std::getline(file, header);
  CHECK(header == std::to_string(r.vocab.size()) + " 8");

  file.seekg(0);
  auto loaded = embed::read_embeddings(file);
  CHECK(loaded.vocab.tokens() == r.vocab.tokens());
  CHECK(loaded.vocab.hash() == r.vocab.hash());
  REQUIRE(loaded.embeddings.data.size() == r.embeddings.data.size());
  for (size_t i = 0; i < r.embeddings.data.size(); ++i) {
    CHECK(loaded.embeddings.data[i] == doctest::Approx(r.embeddings.data[i]).epsilon(1e-15));
  }
}
