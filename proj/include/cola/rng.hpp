#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace cola {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Per-search stream: independent of every other (seed, tag) pair so corpora
// can run in any order or in parallel without cross-talk.
inline Rng make_stream(std::uint64_t seed, std::string_view tag) {
  return Rng(splitmix64(seed ^ splitmix64(fnv1a64(tag))));
}

// Uniform double in [0, 1). Hand-rolled so results do not depend on the
// standard library's distribution implementation.
inline double next_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n). Rejection sampling, bias-free.
inline std::uint64_t next_below(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r = rng();
  while (r >= limit) r = rng();
  return r % n;
}

// Standard normal via Box-Muller on our own uniforms.
inline double next_gaussian(Rng& rng) {
  double u1 = next_unit(rng);
  while (u1 <= 0.0) u1 = next_unit(rng);
  const double u2 = next_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

}  // namespace cola
