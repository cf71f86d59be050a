#pragma once

#include <cstdint>
#include <initializer_list>

namespace opeval::rng {

// SplitMix64 finalizer. Stateless counter-based generation: every draw is a
// pure function of (seed, counter words), so replicates and records can be
// generated in any order, split across threads, or re-generated in isolation
// and always produce the same bits.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_words(std::uint64_t seed,
                                   std::initializer_list<std::uint64_t> words) noexcept {
  std::uint64_t state = mix64(seed);
  for (std::uint64_t w : words) {
    state = mix64(state ^ w);
  }
  return state;
}

// Uniform in [0, 1) with 53 random bits.
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

constexpr double uniform(std::uint64_t seed, std::uint64_t counter, std::uint64_t stream) noexcept {
  return to_unit(hash_words(seed, {counter, stream}));
}

// Child seed for substream `index` (replicate, logger, ...).
constexpr std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return hash_words(seed, {index});
}

}  // namespace opeval::rng
