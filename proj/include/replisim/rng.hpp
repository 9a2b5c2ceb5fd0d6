#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace replisim {

using Rng = std::mt19937_64;

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Sub-seed for a labelled component, e.g. derive_seed(master, "workload", client).
/// Different labels give statistically independent streams from one master seed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                    std::uint64_t index = 0) noexcept {
  return mix64(mix64(master ^ fnv1a(label)) + index);
}

/// Uniform draw in the open interval (0, 1) with 53 bits of resolution.
inline double uniform_open01(Rng& rng) noexcept {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace replisim
