#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace logrank {

// Counter-based randomness: every draw is a pure function of
// (seed, stream role, index, coordinate), so the order in which entries are
// generated, and the number of threads doing it, cannot change a value.
//
// Mixing is the SplitMix64 finalizer applied in a chain over the counter
// words. Normals use the cosine branch of Box–Muller on two counter-derived
// uniforms (sub-counters 0 and 1 of the same coordinate).

enum class StreamRole : std::uint64_t {
  Alpha = 1,
  Beta = 2,
  AlphaRadius = 3,
  BetaRadius = 4,
  JlMap = 5,
  Test = 6,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t role, std::uint64_t index,
                                     std::uint64_t coord, std::uint64_t sub = 0) noexcept {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ role);
  h = splitmix64(h ^ index);
  h = splitmix64(h ^ coord);
  return splitmix64(h ^ sub);
}

// Uniform in [0, 1) with 53 random bits.
constexpr double to_unit_interval(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double counter_uniform(std::uint64_t seed, StreamRole role, std::uint64_t index,
                              std::uint64_t coord) noexcept {
  return to_unit_interval(counter_hash(seed, static_cast<std::uint64_t>(role), index, coord, 0));
}

inline double counter_normal(std::uint64_t seed, StreamRole role, std::uint64_t index,
                             std::uint64_t coord) noexcept {
  const auto r = static_cast<std::uint64_t>(role);
  // 1 − u lies in (0, 1], keeping the logarithm finite.
  const double u1 = 1.0 - to_unit_interval(counter_hash(seed, r, index, coord, 0));
  const double u2 = to_unit_interval(counter_hash(seed, r, index, coord, 1));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Derives an independent child seed, e.g. one per scan cell.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                                    std::uint64_t c = 0) noexcept {
  return counter_hash(master, 0x5eedull, a, b, c);
}

}  // namespace logrank
