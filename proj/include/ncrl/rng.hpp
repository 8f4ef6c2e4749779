#pragma once

#include <cstdint>
#include <random>

namespace ncrl {

using Rng = std::mt19937_64;

/// Splits a master seed into independent per-component streams. Stream ids
/// are stable, so adding a stream never perturbs the others.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  // splitmix64 finalizer over a combined state
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t master, std::uint64_t stream) {
  return Rng(derive_seed(master, stream));
}

// Fixed stream ids.
namespace stream {
inline constexpr std::uint64_t kData = 1;
inline constexpr std::uint64_t kInit = 2;
inline constexpr std::uint64_t kShuffle = 3;
inline constexpr std::uint64_t kNoise = 4;
inline constexpr std::uint64_t kProbe = 5;
inline constexpr std::uint64_t kConsistency = 6;
inline constexpr std::uint64_t kGradCheck = 7;
}  // namespace stream

}  // namespace ncrl
