#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "thermobeat/config.hpp"
#include "thermobeat/correlate.hpp"
#include "thermobeat/detect.hpp"
#include "thermobeat/estimate.hpp"
#include "thermobeat/sampler.hpp"

namespace thermobeat::pipeline {

struct Simulation {
  detect::TimestampStream a;
  detect::TimestampStream b;
  synth::SamplerStats stats;  // sparse engine only
  double rephase_interval = 0.0;
  double kernel_extent = 0.0;
};

/// Atom sets, field and detection events for one configured run.
Simulation simulate(const config::RunConfig& cfg);

/// Channel mix seen by the detectors, for comparing against simulations.
physics::ChannelMix channel_mix(const config::RunConfig& cfg);

G2Curve correlate(const config::RunConfig& cfg, const detect::TimestampStream& a, const detect::TimestampStream& b);
G2Curve simulate_g2(const config::RunConfig& cfg);
G2Curve predict(const config::RunConfig& cfg);

/// One point per configured detuning, seeds offset by the point index.
estimate::SweepResult sweep(const config::RunConfig& cfg);
estimate::StabilityResult stability(const config::RunConfig& cfg);

enum class Command { predict, simulate, correlate, estimate, sweep, stability };
Command parse_command(const std::string& name);
std::string command_name(Command c);

struct RunOptions {
  std::string output_dir;  // resolved by the caller
  std::string input;       // PCTS or g2 CSV for correlate / estimate
};

/// Runs a command and writes its artifacts plus manifest.json into
/// options.output_dir. Returns the paths written, manifest last.
std::vector<std::string> run_pipeline(const config::RunConfig& cfg, Command command, const RunOptions& options);

void write_estimate_csv(const std::string& path, const estimate::BeatEstimate& e);

}  // namespace thermobeat::pipeline
