#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace errscope {

using Rng = std::mt19937_64;

// Uniform integer in [0, n). Multiply-shift keeps results identical across
// standard library implementations, unlike std::uniform_int_distribution.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(
      (static_cast<unsigned __int128>(rng()) * n) >> 64);
}

// Uniform double in [0, 1) from the top 53 bits.
inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace errscope
