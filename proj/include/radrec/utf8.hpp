#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace radrec::utf8 {

// All span offsets in the data model count Unicode scalar values, not bytes.
// Text is held as UTF-8 std::string; these helpers bridge the two.

inline bool is_continuation(unsigned char c) { return (c & 0xc0) == 0x80; }

// Decodes the code point starting at byte `i`, advancing `i` past it.
// Invalid sequences are consumed one byte at a time and returned as the
// replacement character so offsets stay consistent.
inline char32_t decode(std::string_view s, size_t& i) {
  unsigned char c = static_cast<unsigned char>(s[i]);
  if (c < 0x80) {
    ++i;
    return c;
  }
  int extra = 0;
  char32_t cp = 0;
  if ((c & 0xe0) == 0xc0) {
    extra = 1;
    cp = c & 0x1f;
  } else if ((c & 0xf0) == 0xe0) {
    extra = 2;
    cp = c & 0x0f;
  } else if ((c & 0xf8) == 0xf0) {
    extra = 3;
    cp = c & 0x07;
  } else {
    ++i;
    return 0xfffd;
  }
  size_t j = i + 1;
  for (int k = 0; k < extra; ++k, ++j) {
    if (j >= s.size() || !is_continuation(static_cast<unsigned char>(s[j]))) {
      ++i;
      return 0xfffd;
    }
    cp = (cp << 6) | (static_cast<unsigned char>(s[j]) & 0x3f);
  }
  i = j;
  return cp;
}

inline size_t length(std::string_view s) {
  size_t n = 0;
  for (size_t i = 0; i < s.size();) {
    decode(s, i);
    ++n;
  }
  return n;
}

inline std::vector<char32_t> decode_all(std::string_view s) {
  std::vector<char32_t> out;
  for (size_t i = 0; i < s.size();) out.push_back(decode(s, i));
  return out;
}

// Byte offset of the code point at character index `chars` (may equal size()).
inline size_t byte_offset(std::string_view s, size_t chars) {
  size_t i = 0, n = 0;
  while (i < s.size() && n < chars) {
    decode(s, i);
    ++n;
  }
  return i;
}

// Slice by character offsets [begin, end).
inline std::string slice(std::string_view s, size_t begin, size_t end) {
  size_t b = byte_offset(s, begin);
  size_t e = b;
  size_t n = begin;
  while (e < s.size() && n < end) {
    decode(s, e);
    ++n;
  }
  return std::string(s.substr(b, e - b));
}

inline void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
}

inline std::string encode(const std::vector<char32_t>& cps) {
  std::string out;
  for (char32_t cp : cps) append(out, cp);
  return out;
}

}  // namespace radrec::utf8
