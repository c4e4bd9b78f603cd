// Seeded random streams.
//
// Every random quantity in the library is drawn from an explicitly owned
// std::mt19937_64. Streams are derived from a parent seed and a name (plus an
// optional index) so that experiments can hand out independent, reproducible
// streams: master -> repetition -> {ground-truth, train-x, test-x, proposal,
// gumbel}. The engine itself is fully specified by the standard; anything
// layered on top through <random> distributions (normal draws, shuffles) is
// only reproducible within one standard library build.
#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace pmap {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Child seed for the stream `name` (and `index`) under `parent`.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::string_view name,
                                    std::uint64_t index = 0) noexcept {
  return mix64(mix64(parent ^ fnv1a(name)) + mix64(index + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

/// Uniform draw on the open interval (0, 1), built from the top 53 bits.
template <class Engine>
double uniform01(Engine& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Uniform index in [0, n). Requires n > 0.
template <class Engine>
std::size_t uniform_index(Engine& rng, std::size_t n) {
  auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
  return i < n ? i : n - 1;
}

}  // namespace pmap
