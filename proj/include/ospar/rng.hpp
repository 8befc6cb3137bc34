#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ospar {

using Rng = std::mt19937_64;

/// Named sub-generator: every component draws from its own stream ("init",
/// "shuffle", "oracle", ...) derived from one user seed, so components stay
/// reproducible independently of each other.
inline Rng make_rng(std::uint64_t seed, std::string_view stream) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : stream) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return Rng(seq);
}

}  // namespace ospar
