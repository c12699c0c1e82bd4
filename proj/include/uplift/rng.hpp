#ifndef UPLIFT_RNG_HPP
#define UPLIFT_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace uplift::rng {

// SplitMix64 finalizer (Vigna). Bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

// Counter-based stream. The value depends only on (seed, counter, stream,
// slot), so draws can be made in any order, or from parallel workers, and
// the output never depends on scheduling.
constexpr std::uint64_t at(std::uint64_t seed, std::uint64_t counter,
                           std::uint64_t stream, std::uint64_t slot = 0) {
  constexpr std::uint64_t golden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t h = mix64(seed + golden);
  h = mix64(h ^ (counter + golden));
  h = mix64(h ^ (stream + golden));
  h = mix64(h ^ (slot + golden));
  return h;
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::uint64_t seed, std::uint64_t counter,
                        std::uint64_t stream) {
  return static_cast<double>(at(seed, counter, stream, 0) >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller; uses slots 1 and 2 of the stream.
inline double normal(std::uint64_t seed, std::uint64_t counter,
                     std::uint64_t stream) {
  // u1 in (0, 1] so the log is finite.
  const double u1 =
      static_cast<double>((at(seed, counter, stream, 1) >> 11) + 1) * 0x1.0p-53;
  const double u2 =
      static_cast<double>(at(seed, counter, stream, 2) >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

inline bool bernoulli(std::uint64_t seed, std::uint64_t counter,
                      std::uint64_t stream, double p) {
  return uniform01(seed, counter, stream) < p;
}

// Deterministic Fisher-Yates shuffle (slot 3). Unlike std::shuffle, the
// result does not depend on the standard library implementation.
template <typename T>
void shuffle(std::vector<T>& v, std::uint64_t seed, std::uint64_t stream = 0) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j =
        static_cast<std::size_t>(at(seed, i - 1, stream, 3) % i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace uplift::rng

#endif  // UPLIFT_RNG_HPP
