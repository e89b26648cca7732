#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "thermobeat/detect.hpp"
#include "thermobeat/estimate.hpp"
#include "thermobeat/physics.hpp"
#include "thermobeat/sampler.hpp"
#include "thermobeat/synth.hpp"

namespace thermobeat::config {

enum class Engine {
  sparse,  // event-driven Gaussian field sampler, any duration
  trace,   // direct field synthesis on a uniform grid, short runs
};

struct EnsembleConfig {
  std::size_t n_atoms = 10000;
  std::optional<double> rephase_interval;  // s; default 20x the longest coherence time
};

struct RunConfig {
  physics::ExperimentParams experiment;
  physics::LineShape backward_shape = physics::LineShape::gaussian;
  EnsembleConfig forward;
  EnsembleConfig backward;
  detect::DetectorSpec detector;
  double duration = 10.0;          // s
  std::optional<double> dt;        // s, trace engine; default from the sampling limits
  double bin_width = 1e-9;         // s
  double tau_max = 3.2e-6;         // s
  std::uint64_t seed = 1;
  std::string output_dir;          // empty: --out, then $THERMOBEAT_OUT, then "."
  Engine engine = Engine::sparse;
  synth::CoherentMode coherent_mode = synth::CoherentMode::separate;
  bool plateau_normalization = false;
  unsigned threads = 1;
  estimate::WindowMode window = estimate::WindowMode::adaptive;
  double window_half_width = 100e-9;  // s, fixed window
  estimate::Refine refine = estimate::Refine::fit;
  std::vector<double> sweep_detunings{40e6, 60e6, 80e6, 100e6, 120e6, 140e6, 160e6};
  std::vector<double> stability_durations{1.0, 4.0, 16.0, 64.0};
  std::size_t seeds_per_point = 8;

  /// Throws ConfigError naming the offending field path.
  void validate() const;

  /// Ensembles with spectral models and amplitudes derived from the experiment.
  std::pair<synth::EnsembleSpec, synth::EnsembleSpec> ensembles() const;
  double rephase_interval() const;
  estimate::BeatOptions beat_options() const;
};

/// Parses `key = value` lines under [section] headers. Dimensioned values
/// need a unit suffix (Hz, s, K, m, kg, u, rad, deg) with optional SI prefix.
/// Lists are comma separated, each element with its own unit.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Stable `section.key = value` rendering of every resolved field.
std::string canonical_text(const RunConfig& cfg);
/// FNV-1a 64 of canonical_text, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

/// Parses "<number> <unit>" for a dimension such as "frequency"; exposed for tests.
double parse_quantity(const std::string& text, const std::string& dimension);

std::size_t edit_distance(const std::string& a, const std::string& b);

}  // namespace thermobeat::config
