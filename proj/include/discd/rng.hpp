#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "discd/errors.hpp"

namespace discd::rng {

// Uniform draw in [0, n) by rejection sampling on the raw generator
// output. std::uniform_int_distribution is implementation-defined, which
// would break byte-identical logs across standard libraries.
inline std::uint64_t below(std::mt19937_64& g, std::uint64_t n) {
  if (n == 0) throw DataError("rng: empty range");
  std::uint64_t overhang = (UINT64_MAX % n + 1) % n;  // 2^64 mod n
  std::uint64_t r = g();
  if (overhang != 0) {
    std::uint64_t bound = 0 - overhang;  // largest multiple of n
    while (r >= bound) r = g();
  }
  return r % n;
}

// [0, 1) with 53 random bits.
inline double unit(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline bool chance(std::mt19937_64& g, double p) { return unit(g) < p; }

// Fisher-Yates with explicit draws.
template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& g) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(below(g, i));
    std::swap(v[i - 1], v[j]);
  }
}

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937_64& g) {
  if (v.empty()) throw DataError("rng: pick from empty list");
  return v[below(g, v.size())];
}

}  // namespace discd::rng
