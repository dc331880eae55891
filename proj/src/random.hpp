#pragma once

// Portable seeded sampling. std::uniform_int_distribution and std::shuffle
// are implementation-defined, so outputs that must be stable across standard
// libraries use these instead.

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace clare::detail {

/// Uniform integer in [0, bound) by rejection; bound must be > 0.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

template <typename T>
void shuffle(std::span<T> items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[uniform_below(rng, i)]);
  }
}

}  // namespace clare::detail
