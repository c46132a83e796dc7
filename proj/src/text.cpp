#include "radrec/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "radrec/utf8.hpp"

namespace radrec::text {

namespace {

bool is_ws(char32_t c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f'; }
bool is_upper(char32_t c) { return c >= 'A' && c <= 'Z'; }
bool is_digit(char32_t c) { return c >= '0' && c <= '9'; }
bool is_alpha(char32_t c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 128; }
bool is_alnum(char32_t c) { return is_alpha(c) || is_digit(c); }

std::string lower_ascii(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// A section header line: >=3 alphabetic chars, every letter uppercase, only
// letters, digits, spaces, ':', '/', '-' allowed.
bool is_header_line(const std::vector<char32_t>& cps, size_t begin, size_t end) {
  size_t letters = 0;
  bool any_other = false;
  for (size_t i = begin; i < end; ++i) {
    char32_t c = cps[i];
    if (c >= 'A' && c <= 'Z') {
      ++letters;
    } else if ((c >= 'a' && c <= 'z')) {
      return false;
    } else if (is_digit(c) || c == ' ' || c == ':' || c == '/' || c == '-') {
      continue;
    } else {
      any_other = true;
    }
  }
  return letters >= 3 && !any_other;
}

}  // namespace

Segmenter::Segmenter() : Segmenter(default_abbreviations()) {}

Segmenter::Segmenter(std::vector<std::string> abbreviations) {
  for (std::string& a : abbreviations) abbreviations_.push_back(lower_ascii(a));
}

const std::vector<std::string>& Segmenter::default_abbreviations() {
  static const std::vector<std::string> abbr = {
      "Dr.", "Mr.", "Mrs.", "Ms.", "vs.", "e.g.", "i.e.", "approx.", "cm.", "mm.",
  };
  return abbr;
}

std::vector<std::string> Segmenter::load_abbreviations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open abbreviation list: " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

std::vector<corpus::CharRange> Segmenter::split_sentences(const std::string& text) const {
  std::vector<char32_t> cps = utf8::decode_all(text);
  const size_t n = cps.size();

  std::unordered_set<std::string> abbr(abbreviations_.begin(), abbreviations_.end());

  // Sentence-final boundaries (exclusive end positions), including hard breaks
  // from line structure.
  std::vector<size_t> cuts;

  // Line pass: blank lines and header lines force breaks around themselves.
  size_t line_start = 0;
  for (size_t i = 0; i <= n; ++i) {
    if (i == n || cps[i] == '\n') {
      size_t b = line_start, e = i;
      while (b < e && is_ws(cps[b])) ++b;
      while (e > b && is_ws(cps[e - 1])) --e;
      if (b == e || is_header_line(cps, b, e)) {
        cuts.push_back(line_start);  // break before the line
        cuts.push_back(i == n ? n : i + 1);  // and after it
      }
      line_start = i + 1;
    }
  }

  // Terminator pass.
  for (size_t i = 0; i < n; ++i) {
    char32_t c = cps[i];
    if (c != '.' && c != '!' && c != '?') continue;

    if (c == '.') {
      // Abbreviation guard: the maximal [letters|.] run ending here.
      size_t s = i;
      while (s > 0 && (is_alpha(cps[s - 1]) || cps[s - 1] == '.')) --s;
      if (s < i) {
        std::string word;
        for (size_t k = s; k <= i; ++k) utf8::append(word, cps[k]);
        if (abbr.count(lower_ascii(word))) continue;
      }
    }

    size_t j = i + 1;
    if (j >= n) continue;  // end of text closes the sentence anyway
    if (!is_ws(cps[j])) continue;
    bool saw_newline = false;
    size_t k = j;
    while (k < n && is_ws(cps[k])) {
      if (cps[k] == '\n') saw_newline = true;
      ++k;
    }
    if (saw_newline || k == n || is_upper(cps[k])) cuts.push_back(i + 1);
  }

  cuts.push_back(n);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<corpus::CharRange> spans;
  size_t start = 0;
  for (size_t cut : cuts) {
    size_t b = start, e = cut;
    while (b < e && is_ws(cps[b])) ++b;
    while (e > b && is_ws(cps[e - 1])) --e;
    if (b < e) spans.push_back({b, e});
    start = cut;
  }
  return spans;
}

std::vector<Token> tokenize(const std::string& text, size_t begin, size_t end) {
  std::vector<char32_t> cps = utf8::decode_all(text);
  if (end > cps.size()) end = cps.size();

  std::vector<Token> tokens;
  auto emit = [&](size_t b, size_t e) {
    Token t;
    t.begin = b;
    t.end = e;
    for (size_t k = b; k < e; ++k) utf8::append(t.surface, cps[k]);
    t.norm = lower_ascii(t.surface);
    tokens.push_back(std::move(t));
  };

  size_t i = begin;
  while (i < end) {
    if (is_ws(cps[i])) {
      ++i;
      continue;
    }
    if (is_alnum(cps[i])) {
      size_t b = i;
      while (i < end) {
        if (is_alnum(cps[i])) {
          ++i;
        } else if ((cps[i] == '-' || cps[i] == '.') && i > b && is_digit(cps[i - 1]) &&
                   i + 1 < end && is_digit(cps[i + 1])) {
          ++i;  // keep ranges and decimals whole
        } else {
          break;
        }
      }
      emit(b, i);
    } else {
      emit(i, i + 1);
      ++i;
    }
  }
  return tokens;
}

std::vector<Token> tokenize(const std::string& text) {
  return tokenize(text, 0, utf8::length(text));
}

std::vector<Sentence> segment_report(const corpus::Report& report, const Segmenter& segmenter) {
  std::vector<Sentence> out;
  for (const corpus::CharRange& span : segmenter.split_sentences(report.text)) {
    Sentence s;
    s.report_id = report.report_id;
    s.index = out.size();
    s.begin = span.begin;
    s.end = span.end;
    s.tokens = tokenize(report.text, span.begin, span.end);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace radrec::text
