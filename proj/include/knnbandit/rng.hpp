#pragma once

#include <cstdint>
#include <random>

namespace knnbandit {

// Single PRNG type everywhere so seeded runs replay bit-identically.
using Rng = std::mt19937_64;

// splitmix64 finalizer; decorrelates nearby seed values.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Deterministic child seed for stream `stream` under `master`. Used for the
// per-trial seed tree: trial -> (env stream 0, policy stream 1). The derivation
// depends only on the two integers, never on thread scheduling.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(splitmix64(master) + 0x9e3779b97f4a7c15ull * (stream + 1));
}

}  // namespace knnbandit
