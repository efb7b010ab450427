#pragma once

#include <cstdint>
#include <cstring>
#include <string>

#include "gpphs/types.hpp"

namespace gpphs {

// FNV-1a, 64 bit. Used for artifact integrity tags and seed derivation.
class Fnv1a {
 public:
  Fnv1a& update(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ull;
    }
    return *this;
  }

  Fnv1a& update(const std::string& s) { return update(s.data(), s.size()); }

  Fnv1a& update(std::uint64_t v) { return update(&v, sizeof v); }

  Fnv1a& update(const Mat& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        double v = m(i, j);
        update(&v, sizeof v);
      }
    return *this;
  }

  std::uint64_t value() const { return state_; }

  std::string hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    std::uint64_t v = state_;
    for (int i = 15; i >= 0; --i) {
      out[i] = digits[v & 0xf];
      v >>= 4;
    }
    return out;
  }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ull;
};

inline std::string digest_hex(const std::string& s) { return Fnv1a().update(s).hex(); }

// Stable sub-seed for a pipeline stage: hash of (master seed, stage name, size tag).
inline std::uint64_t derive_seed(std::uint64_t master, const std::string& stage, std::uint64_t n) {
  return Fnv1a().update(master).update(stage).update(n).value();
}

}  // namespace gpphs
