#pragma once

#include <cstdint>

namespace mff {

// splitmix64 finalizer; bijective, good avalanche
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based stream: draw j of sample i under a master seed is a pure
// function of (seed, i, j), so batches can be partitioned across workers
// in any way without changing a single draw.
inline std::uint64_t counter_draw(std::uint64_t seed, std::uint64_t i, std::uint64_t j) {
  return mix64(mix64(seed ^ mix64(i)) ^ j);
}

// uniform in [0, 1), 53 random bits
inline double counter_u01(std::uint64_t seed, std::uint64_t i, std::uint64_t j) {
  return static_cast<double>(counter_draw(seed, i, j) >> 11) * 0x1.0p-53;
}

}  // namespace mff
