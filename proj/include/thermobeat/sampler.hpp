#pragma once

#include <cstdint>
#include <vector>

#include "thermobeat/synth.hpp"

// Event-driven photon sampler for long runs. Instead of tabulating the field
// on a Nyquist grid it draws Poisson candidate times at a bounding rate and
// samples the chaotic field only at those times, as a circular Gaussian
// conditioned on the earlier candidates that are still correlated with it.
// Accepted candidates form an inhomogeneous Poisson process with rate
// efficiency * |E(t)|^2.
namespace thermobeat::synth {

struct SamplerOptions {
  double kappa = 12.0;             // bound = kappa * mean chaotic intensity
  std::size_t max_cluster = 16;    // conditioning points kept per candidate
  double chunk_duration = 1e-3;    // s, rounded to whole rephase blocks
  unsigned threads = 1;
};

struct SamplerStats {
  std::uint64_t candidates = 0;
  std::uint64_t photons = 0;
  std::uint64_t clipped = 0;       // candidates whose intensity exceeded the bound
  std::size_t max_cluster = 0;
};

enum class CoherentMode {
  separate,     // coherent light adds |alpha|^2 without interfering with the chaotic field
  interfering,  // alpha is added to the field amplitude
};

struct SamplerInput {
  const FieldKernel* kernel = nullptr;
  double coherent_amplitude = 0.0;  // sqrt(counts/s)
  CoherentMode coherent_mode = CoherentMode::separate;
  double efficiency = 1.0;
  double duration = 0.0;            // s
  double rephase_interval = 1e-6;   // s
  std::uint64_t seed = 0;
};

/// Photon arrival ticks (ps) in [0, duration), sorted.
std::vector<std::int64_t> sample_photons(const SamplerInput& input, const SamplerOptions& options = {},
                                         SamplerStats* stats = nullptr);

}  // namespace thermobeat::synth
