#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace salclass {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; mixes a 64-bit value into a well-spread seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for a named sub-stream ("init", "shuffle", "augment", "metric-splits")
/// of a root seed, optionally indexed (epoch, sample, ...).
constexpr std::uint64_t stream_seed(std::uint64_t root, std::string_view name, std::uint64_t index = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the stream name
  for (char ch : name) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return mix_seed(mix_seed(root ^ h) + index);
}

inline Rng make_rng(std::uint64_t root, std::string_view name, std::uint64_t index = 0) {
  return Rng(stream_seed(root, name, index));
}

}  // namespace salclass
