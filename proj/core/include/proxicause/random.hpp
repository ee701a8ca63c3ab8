#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace proxicause {

// The one generator used everywhere: 64-bit Mersenne twister.
using Rng = std::mt19937_64;

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a, used to turn stream names into tags.
constexpr std::uint64_t stream_tag(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Seed for (master, run index, stream). Distinct inputs give statistically
// independent seeds; identical inputs give identical seeds on every platform.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run,
                                    std::uint64_t stream) {
  return mix64(mix64(mix64(master) ^ run) ^ stream);
}

}  // namespace proxicause
