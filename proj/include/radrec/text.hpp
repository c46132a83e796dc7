#pragma once

#include <string>
#include <vector>

#include "radrec/corpus.hpp"

namespace radrec::text {

struct Token {
  std::string surface;
  size_t begin = 0;  // char offsets into the report text
  size_t end = 0;
  std::string norm;  // lowercased surface; models consume this
};

struct Sentence {
  std::string report_id;
  size_t index = 0;
  size_t begin = 0;
  size_t end = 0;
  std::vector<Token> tokens;
};

// Sentence splitter with span tracking. Boundaries sit at . ! ? followed by
// whitespace and an uppercase letter, or by a newline; blank lines and
// ALL-CAPS section headers ("IMPRESSION", "FINDINGS:") are hard breaks.
// Abbreviations from the configured list never split.
class Segmenter {
 public:
  Segmenter();
  explicit Segmenter(std::vector<std::string> abbreviations);

  std::vector<corpus::CharRange> split_sentences(const std::string& text) const;

  static const std::vector<std::string>& default_abbreviations();
  // One abbreviation per line, UTF-8.
  static std::vector<std::string> load_abbreviations(const std::string& path);

 private:
  std::vector<std::string> abbreviations_;  // stored lowercased, with trailing '.'
};

// Whitespace split with punctuation detached, except hyphens and periods
// between digits so "4-5" and "3.5" stay whole. Offsets are absolute char
// offsets into `text`; [begin, end) restricts the scanned range.
std::vector<Token> tokenize(const std::string& text, size_t begin, size_t end);
std::vector<Token> tokenize(const std::string& text);

std::vector<Sentence> segment_report(const corpus::Report& report, const Segmenter& segmenter);

}  // namespace radrec::text
