#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "thermobeat/synth.hpp"

namespace thermobeat::detect {

/// Two-detector HBT model.
struct DetectorSpec {
  double efficiency = 1.0;
  double dark_rate = 0.0;        // counts/s per detector
  double jitter_sigma = 500e-12; // s, Gaussian
  double dead_time = 0.0;        // s, non-paralyzable
  double splitter_ratio = 0.5;   // probability of routing to channel 0

  void validate() const;
  static DetectorSpec ideal();
};

/// Detection ticks of one channel, one tick = 1 ps.
struct TimestampStream {
  int channel = 0;
  std::vector<std::int64_t> times;
  double duration = 0.0;  // s

  /// Throws DataError unless times are strictly increasing and inside [0, duration].
  void validate() const;
  double rate() const;
};

struct IntensityTrace {
  double dt = 0.0;
  std::vector<double> samples;  // counts/s
  double start_time = 0.0;

  double duration() const { return dt * static_cast<double>(samples.size()); }
};

IntensityTrace intensity_trace(const synth::FieldTrace& trace);

/// Thinning against the trace maximum, then the detector chain.
std::pair<TimestampStream, TimestampStream> generate_events(const IntensityTrace& intensity,
                                                            const DetectorSpec& det, std::uint64_t seed);

/// Detector chain on photon arrival ticks sorted in time: beam-splitter
/// routing, dark counts, dead time, jitter, clipping to [0, duration].
/// Efficiency is not applied here. Random draws are keyed by 1 ms time
/// chunks so that results do not depend on how the photons were produced.
std::pair<TimestampStream, TimestampStream> detect_photons(const std::vector<std::int64_t>& photon_ticks,
                                                           double duration, const DetectorSpec& det,
                                                           std::uint64_t seed);

/// Non-paralyzable dead time on a sorted tick list.
std::vector<std::int64_t> apply_dead_time(const std::vector<std::int64_t>& ticks, std::int64_t dead_ticks);

}  // namespace thermobeat::detect
