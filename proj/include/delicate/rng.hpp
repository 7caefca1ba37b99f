#pragma once

// Deterministic pseudo-random primitives. std::shuffle and the std
// distributions are implementation-defined across standard libraries, so
// everything seeded here goes through this fixed splitmix64 stream to keep
// artifacts byte-identical everywhere.

#include <cstdint>
#include <vector>

namespace delicate::rng {

struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Unbiased draw in [0, bound) by rejection.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t threshold = -bound % bound;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  double next_double() {  // [0, 1)
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }
};

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  SplitMix64 s(a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2)));
  return s.next();
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix(mix(a, b), c);
}

inline std::uint64_t hash_bytes(const void* data, std::size_t n) {
  // FNV-1a, 64-bit.
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

template <typename T>
void shuffle(std::vector<T>& v, SplitMix64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    using std::swap;
    swap(v[i - 1], v[j]);
  }
}

}  // namespace delicate::rng
