#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace bbm {

/**
 * Deterministic RNG wrapper. The engine is fixed and all conversions
 * (uniform doubles, bounded integers, shuffling) are hand-rolled, so a seed
 * pins the exact sequence independent of standard-library distribution
 * implementations.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform on the open interval (0, 1).
  double uniform01() {
    const std::uint64_t x = gen_();
    return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform integer in [0, n); n >= 1. Rejection sampling, no modulo bias.
  std::size_t uniform_index(std::size_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = gen_();
    while (x >= limit) x = gen_();
    return static_cast<std::size_t>(x % n);
  }

  // Fisher–Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[uniform_index(i)]);
  }

 private:
  std::mt19937_64 gen_;
};

// FNV-1a over raw bytes; used to derive stable per-document seeds.
inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t h = 1469598103934665603ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace bbm
