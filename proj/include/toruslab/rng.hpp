#pragma once

#include <cstdint>
#include <random>

namespace toruslab {

using Engine = std::mt19937_64;

// Independent stream per (seed, chain); chain draws are consumed one per step.
inline Engine chain_engine(std::uint64_t seed, std::uint64_t chain) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chain), static_cast<std::uint32_t>(chain >> 32)};
  return Engine(seq);
}

// Uniform draw in [0, 1) with 53 random bits.
inline double uniform01(Engine& e) { return static_cast<double>(e() >> 11) * 0x1.0p-53; }

}  // namespace toruslab
