#pragma once

#include <cstdint>
#include <random>

namespace diffnet {

using Rng = std::mt19937_64;

// Stable derivation of per-stream seeds from a master seed, so parallel
// realizations are reproducible regardless of scheduling (splitmix64).
inline uint64_t derive_seed(uint64_t master, uint64_t stream) {
  uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace diffnet
