#pragma once

#include <cstdint>
#include <string>

namespace radrec {

// FNV-1a 64-bit. Used for output manifests and vocabulary fingerprints;
// collision resistance beyond change detection is not a goal.
class Fnv1a {
 public:
  void update(const void* data, size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void update(const std::string& s) { update(s.data(), s.size()); }
  uint64_t digest() const { return h_; }

  std::string hex() const {
    static const char* k = "0123456789abcdef";
    std::string out(16, '0');
    uint64_t h = h_;
    for (int i = 15; i >= 0; --i) {
      out[static_cast<size_t>(i)] = k[h & 0xf];
      h >>= 4;
    }
    return out;
  }

 private:
  uint64_t h_ = 0xcbf29ce484222325ULL;
};

inline std::string content_hash(const std::string& bytes) {
  Fnv1a h;
  h.update(bytes);
  return h.hex();
}

}  // namespace radrec
