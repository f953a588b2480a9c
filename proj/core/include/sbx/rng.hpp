#pragma once

#include <cstdint>
#include <random>

namespace sbx {

/// 64-bit mixing function (splitmix64 finalizer). Used to derive independent
/// substream seeds: every seeded component documents its inputs as
/// mix64(seed, tag...), so results do not depend on execution order.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Folds additional words into the seed: mix64(a, b) = mix64(mix64(a) ^ b).
template <class... Rest>
constexpr std::uint64_t mix64(std::uint64_t head, std::uint64_t next, Rest... rest) {
  return mix64(mix64(head) ^ next, rest...);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(mix64(seed)); }

}  // namespace sbx
