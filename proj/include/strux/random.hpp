#pragma once

// Platform-stable randomness. std::mt19937_64 output is fixed by the
// standard; the distributions below avoid <random>'s implementation-defined
// distribution classes.

#include <cstdint>
#include <random>
#include <string_view>

namespace strux::rng {

/// Unbiased integer in [0, bound) by rejection on raw 64-bit draws.
inline std::uint64_t uniform_below(std::mt19937_64& gen, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  std::uint64_t x = 0;
  do {
    x = gen();
  } while (x >= limit);
  return x % bound;
}

/// Integer in [lo, hi].
inline std::uint64_t uniform_int(std::mt19937_64& gen, std::uint64_t lo, std::uint64_t hi) {
  return lo + uniform_below(gen, hi - lo + 1);
}

/// Double in [0, 1) from the top 53 bits.
inline double uniform_unit(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform_real(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(gen);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Seed for sample `index` of query `query_id` under run seed `base`.
inline std::uint64_t derive_seed(std::string_view query_id, std::uint64_t index, std::uint64_t base) {
  return splitmix64(fnv1a64(query_id) ^ splitmix64(index ^ splitmix64(base)));
}

}  // namespace strux::rng
