#pragma once

#include <cstdint>

namespace polymom {

/// splitmix64 step; advances `state` and returns the next output.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Derives an independent stream seed from (base, stream, index).
/// Used wherever work is partitioned into tasks so results do not depend on
/// scheduling: every task re-derives its randomness from its own identity.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                 std::uint64_t index) {
  std::uint64_t s = base;
  (void)splitmix64(s);
  s ^= 0x8f0c1b2a3d4e5f60ull * (stream + 1);
  (void)splitmix64(s);
  s ^= 0xd1b54a32d192ed03ull * (index + 1);
  return splitmix64(s);
}

}  // namespace polymom
