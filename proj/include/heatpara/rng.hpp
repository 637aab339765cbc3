#pragma once

#include <cstdint>
#include <random>

namespace heatpara {

// Stream tags keep independent draws for the same seed apart.
enum class Stream : std::uint64_t {
  WhiteNoise = 1,
  TestField = 2,
  PowerIteration = 3,
  Lanczos = 4,
  Bootstrap = 5,
  Calibration = 6,
};

inline std::mt19937_64 make_stream(std::uint64_t seed, Stream tag, std::uint64_t sub = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(sub),
                    static_cast<std::uint32_t>(sub >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace heatpara
