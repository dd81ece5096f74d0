#pragma once

#include <cstdint>
#include <random>

namespace extremal {

/// SplitMix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Engine for the stream identified by (seed, a, b). Streams with distinct
/// indices are statistically independent, and the draw sequence depends
/// only on the indices, never on scheduling.
inline std::mt19937_64 stream_engine(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return std::mt19937_64(mix_seed(mix_seed(mix_seed(seed) ^ a) ^ (b * 0xd1b54a32d192ed03ULL)));
}

}  // namespace extremal
