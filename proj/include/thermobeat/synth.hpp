#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "thermobeat/curves.hpp"
#include "thermobeat/physics.hpp"
#include "thermobeat/random.hpp"

namespace thermobeat::synth {

using cplx = std::complex<double>;

/// One velocity class of scatterers.
struct EnsembleSpec {
  physics::SpectralModel spectral_model;
  std::size_t n_atoms = 10000;
  double mean_amplitude = 0.0;    // sqrt(counts/s); class mean intensity is its square
  double rephase_interval = 1e-6; // s

  void validate() const;
};

/// Sampled emitters. Frequencies are offsets from the laser in Hz.
struct AtomSet {
  std::vector<double> frequencies;
  std::vector<double> phases;
  std::vector<double> amplitudes;

  std::size_t size() const { return frequencies.size(); }
  /// Sum of squared amplitudes, the class mean intensity.
  double power() const;
};

/// Uniformly sampled complex field in the frame rotating at the laser frequency.
struct FieldTrace {
  double dt = 0.0;
  std::vector<cplx> samples;
  double start_time = 0.0;

  double duration() const { return dt * static_cast<double>(samples.size()); }
};

/// Draws the emitters of one class. `stream` separates the forward and
/// backward classes when both are drawn from the same seed.
AtomSet sample_atom_set(const EnsembleSpec& spec, std::uint64_t seed,
                        Stream stream = Stream::forward_atoms);

/// Band edge used by the sampling check: largest |centre| + 5 robust sigmas
/// over both classes, with backward shifted by `beat_offset`.
double spectral_extent(const AtomSet& forward, const AtomSet& backward, double beat_offset);

/// Direct sum over all emitters plus a constant coherent amplitude. Phases
/// are redrawn at every multiple of `rephase_interval`; block 0 keeps the
/// phases stored in the atom sets. Throws ConfigError when
/// dt > 1 / (8 * spectral_extent).
FieldTrace synthesize_field(const AtomSet& forward, const AtomSet& backward, double beat_offset,
                            double coherent_amplitude, double duration, double dt,
                            double rephase_interval, std::uint64_t seed);

/// Normalized <E*(t) E(t + tau)> / <|E|^2> on the trace grid, tau in [0, tau_max].
G1Curve field_g1(const FieldTrace& trace, double tau_max);

/// Field covariance C(tau) = sum |a|^2 exp(-i 2 pi nu tau) of the given
/// atom sets, tabulated on [0, extent] for fast lookup.
class FieldKernel {
 public:
  FieldKernel() = default;
  FieldKernel(const AtomSet& forward, const AtomSet& backward, double beat_offset, double extent);

  /// C(tau); zero beyond the extent, Hermitian in tau.
  cplx operator()(double tau) const;
  double variance() const { return variance_; }
  double extent() const { return extent_; }
  double step() const { return step_; }

 private:
  std::vector<double> re_, im_;
  double step_ = 0.0;
  double inv_step_ = 0.0;
  double extent_ = 0.0;
  double variance_ = 0.0;
};

}  // namespace thermobeat::synth
