#pragma once

// Seeded random number plumbing.
//
// Every random quantity in the library is drawn from a std::mt19937_64 engine
// whose seed is derived from a master seed and a tuple of integer keys
// (trial index, arm index, budget, ...). Derivation folds each key through the
// SplitMix64 finalizer, so the resulting streams do not depend on the order in
// which runs are executed.

#include <cstdint>
#include <initializer_list>
#include <random>

namespace riskbai {

using Engine = std::mt19937_64;

/// Seed used by the CLI and the experiment harness when none is supplied.
inline constexpr std::uint64_t kDefaultSeed = 20210917ULL;

/// SplitMix64 finalizer (Steele, Lea & Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Mixes a master seed with an ordered list of keys.
///
///   h0 = splitmix64(master)
///   h_{i+1} = splitmix64(h_i ^ splitmix64(key_i + i + 1))
///
/// The key position is folded in so that (1, 2) and (2, 1) differ.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = splitmix64(master);
  std::uint64_t pos = 1;
  for (std::uint64_t k : keys) {
    h = splitmix64(h ^ splitmix64(k + pos));
    ++pos;
  }
  return h;
}

/// Uniform double in the open interval (0, 1) built from the top 53 bits.
inline double uniform_open01(Engine& engine) noexcept {
  return (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace riskbai
