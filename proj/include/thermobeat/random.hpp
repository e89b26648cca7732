#pragma once

#include <cstdint>
#include <random>

namespace thermobeat {

using Rng = std::mt19937_64;

// Named RNG substreams. The numeric values are part of the reproducibility
// contract: changing them changes every simulated output.
enum class Stream : std::uint32_t {
  forward_atoms = 1,
  backward_atoms = 2,
  field_phases = 3,
  candidates = 4,
  routing = 5,
  dark_counts = 6,
  jitter = 7,
  trace_events = 8,
};

/// Generator for substream (seed, stream, index). Independent of how work
/// is chunked, so chunked and sequential runs draw identical numbers.
inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace thermobeat
