#include "thermobeat/pipeline.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "thermobeat/errors.hpp"
#include "thermobeat/pcts.hpp"
#include "thermobeat/synth.hpp"

namespace thermobeat::pipeline {

namespace fs = std::filesystem;
using config::RunConfig;

namespace {

constexpr std::size_t max_trace_samples = 200'000'000;

struct Emitters {
  synth::AtomSet forward, backward;
  double coherent_amplitude = 0.0;
};

Emitters sample_emitters(const RunConfig& cfg) {
  auto [ef, eb] = cfg.ensembles();
  Emitters em;
  const auto& e = cfg.experiment;
  if (e.rate_forward > 0.0) em.forward = synth::sample_atom_set(ef, cfg.seed, Stream::forward_atoms);
  if (e.rate_backward > 0.0) em.backward = synth::sample_atom_set(eb, cfg.seed, Stream::backward_atoms);
  em.coherent_amplitude = std::sqrt(e.coherent_ratio * e.total_rate());
  return em;
}

double kernel_extent(const RunConfig& cfg) {
  auto [f, b] = physics::channel_models(cfg.experiment, cfg.backward_shape);
  double extent = 0.0;
  if (cfg.experiment.rate_forward > 0.0) extent = std::max(extent, f.envelope_extent(1e-4));
  if (cfg.experiment.rate_backward > 0.0) extent = std::max(extent, b.envelope_extent(1e-4));
  if (!std::isfinite(extent)) {
    throw ConfigError("a zero spectral width makes the field coherent forever; use the trace engine");
  }
  return std::max(extent, 1e-9);
}

}  // namespace

Simulation simulate(const RunConfig& cfg) {
  cfg.validate();
  Simulation sim;
  sim.rephase_interval = cfg.rephase_interval();
  Emitters em = sample_emitters(cfg);
  const double eta = cfg.detector.efficiency;
  const bool interfering = cfg.coherent_mode == synth::CoherentMode::interfering;

  if (cfg.engine == config::Engine::sparse) {
    sim.kernel_extent = kernel_extent(cfg);
    synth::FieldKernel kernel(em.forward, em.backward, 0.0, sim.kernel_extent);
    synth::SamplerInput in;
    in.kernel = &kernel;
    in.coherent_amplitude = em.coherent_amplitude;
    in.coherent_mode = cfg.coherent_mode;
    in.efficiency = eta;
    in.duration = cfg.duration;
    in.rephase_interval = sim.rephase_interval;
    in.seed = cfg.seed;
    synth::SamplerOptions opt;
    opt.threads = cfg.threads;
    auto photons = synth::sample_photons(in, opt, &sim.stats);
    std::tie(sim.a, sim.b) = detect::detect_photons(photons, cfg.duration, cfg.detector, cfg.seed);
    return sim;
  }

  double dt = 0.0;
  if (cfg.dt) {
    dt = *cfg.dt;
  } else {
    double extent = synth::spectral_extent(em.forward, em.backward, 0.0);
    double mean = cfg.experiment.total_rate() + em.coherent_amplitude * em.coherent_amplitude;
    dt = 0.1 / (eta * 40.0 * mean + 1e-300);
    if (extent > 0.0) dt = std::min(dt, 1.0 / (8.0 * extent));
    dt *= 0.999;
  }
  if (cfg.duration / dt > static_cast<double>(max_trace_samples)) {
    throw ConfigError("run.duration needs more than " + std::to_string(max_trace_samples) +
                      " field samples; use run.engine = sparse");
  }
  auto field = synth::synthesize_field(em.forward, em.backward, 0.0, interfering ? em.coherent_amplitude : 0.0,
                                       cfg.duration, dt, sim.rephase_interval, cfg.seed);
  auto intensity = detect::intensity_trace(field);
  if (!interfering) {
    const double a2 = em.coherent_amplitude * em.coherent_amplitude;
    for (double& v : intensity.samples) v += a2;
  }
  std::tie(sim.a, sim.b) = detect::generate_events(intensity, cfg.detector, cfg.seed);
  return sim;
}

physics::ChannelMix channel_mix(const RunConfig& cfg) { return physics::make_mix(cfg.experiment, cfg.backward_shape); }

G2Curve correlate(const RunConfig& cfg, const detect::TimestampStream& a, const detect::TimestampStream& b) {
  correlate::HistogramOptions h;
  h.chunks = cfg.threads;
  h.threads = cfg.threads;
  return correlate::compute_g2(a, b, cfg.bin_width, cfg.tau_max,
                               cfg.plateau_normalization ? correlate::Normalization::plateau
                                                         : correlate::Normalization::rates,
                               h);
}

G2Curve simulate_g2(const RunConfig& cfg) {
  Simulation sim = simulate(cfg);
  return correlate(cfg, sim.a, sim.b);
}

G2Curve predict(const RunConfig& cfg) {
  cfg.validate();
  auto grid = symmetric_tau_grid(cfg.bin_width, cfg.tau_max);
  return physics::predict_g2(channel_mix(cfg), grid);
}

estimate::SweepResult sweep(const RunConfig& cfg) {
  if (cfg.sweep_detunings.size() < 3) throw ConfigError("sweep.detunings: need at least 3 values");
  {
    double widest = 0.0;
    for (double d : cfg.sweep_detunings) widest = std::max(widest, std::abs(d));
    double f = physics::beat_frequency(widest, cfg.experiment.observation_angle);
    if (cfg.bin_width >= 0.25 / f) {
      std::ostringstream os;
      os << "run.bin_width: " << cfg.bin_width << " s cannot resolve the " << f << " Hz beat at detuning " << widest
         << " Hz; use less than " << 0.25 / f << " s";
      throw ConfigError(os.str());
    }
  }
  std::vector<estimate::SweepPoint> points;
  for (std::size_t i = 0; i < cfg.sweep_detunings.size(); ++i) {
    RunConfig c = cfg;
    c.experiment.detuning = cfg.sweep_detunings[i];
    c.seed = cfg.seed + i;
    try {
      points.push_back({c.experiment.detuning, estimate::estimate_beat(simulate_g2(c), c.beat_options())});
    } catch (const EstimationError& e) {
      std::ostringstream os;
      os << "at detuning " << c.experiment.detuning << " Hz: " << e.what();
      throw EstimationError(os.str());
    }
  }
  return estimate::fit_slope(points);
}

estimate::StabilityResult stability(const RunConfig& cfg) {
  auto sim = [&cfg](double duration, std::uint64_t seed) {
    RunConfig c = cfg;
    c.duration = duration;
    c.seed = seed;
    return simulate_g2(c);
  };
  return estimate::stability_scan(sim, cfg.stability_durations, cfg.seeds_per_point, cfg.seed, cfg.beat_options());
}

Command parse_command(const std::string& name) {
  static const std::map<std::string, Command> names{{"predict", Command::predict},     {"simulate", Command::simulate},
                                                    {"correlate", Command::correlate}, {"estimate", Command::estimate},
                                                    {"sweep", Command::sweep},         {"stability", Command::stability}};
  auto it = names.find(name);
  if (it == names.end()) throw ConfigError("unknown command '" + name + "'");
  return it->second;
}

std::string command_name(Command c) {
  switch (c) {
    case Command::predict: return "predict";
    case Command::simulate: return "simulate";
    case Command::correlate: return "correlate";
    case Command::estimate: return "estimate";
    case Command::sweep: return "sweep";
    case Command::stability: return "stability";
  }
  return "";
}

void write_estimate_csv(const std::string& path, const estimate::BeatEstimate& e) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open '" + path + "' for writing");
  os << std::setprecision(17)
     << "f_mod_hz,sigma_f_hz,detuning_abs_hz,spectral_resolution_hz,peak_magnitude,noise_floor,window_half_width_s,method\n"
     << e.f_mod << ',' << e.sigma_f << ',' << e.detuning_abs << ',' << e.spectral_resolution << ',' << e.peak_magnitude
     << ',' << e.noise_floor << ',' << e.window_half_width << ',' << e.method << '\n';
}

namespace {

nlohmann::json estimate_json(const estimate::BeatEstimate& e) {
  return {{"f_mod_hz", e.f_mod},
          {"sigma_f_hz", e.sigma_f},
          {"detuning_abs_hz", e.detuning_abs},
          {"spectral_resolution_hz", e.spectral_resolution},
          {"peak_magnitude", e.peak_magnitude},
          {"noise_floor", e.noise_floor},
          {"window_half_width_s", e.window_half_width},
          {"method", e.method}};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open '" + path + "' for writing");
  os << text;
}

detect::TimestampStream& with_duration(detect::TimestampStream& s, double d) {
  s.duration = d;
  return s;
}

}  // namespace

std::vector<std::string> run_pipeline(const RunConfig& cfg, Command command, const RunOptions& options) {
  cfg.validate();
  const fs::path dir = options.output_dir.empty() ? fs::path(".") : fs::path(options.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("output directory '" + dir.string() + "' is not writable");

  std::vector<std::string> written;
  auto out = [&](const std::string& name) {
    std::string p = (dir / name).string();
    written.push_back(p);
    return p;
  };
  nlohmann::json results = nlohmann::json::object();

  auto load_streams = [&]() {
    if (options.input.empty()) throw ConfigError("--input <pcts-path> is required for " + command_name(command));
    auto streams = pcts::read_file(options.input);
    return streams;
  };
  auto g2_summary = [&](const G2Curve& g2) {
    results["g2"] = {{"bins", g2.size()},
                     {"bin_width_s", g2.bin_width},
                     {"total_coincidences", g2.total_coincidences},
                     {"rate_a", g2.rates.first},
                     {"rate_b", g2.rates.second},
                     {"duration_s", g2.duration},
                     {"g2_zero", g2.values[g2.centre_index()]}};
  };

  switch (command) {
    case Command::predict: {
      G2Curve g2 = predict(cfg);
      write_g2_csv_file(out("g2_predicted.csv"), g2);
      results["beat_frequency_hz"] = physics::beat_frequency(cfg.experiment.detuning, cfg.experiment.observation_angle);
      results["g2_zero"] = g2.values[g2.centre_index()];
      break;
    }
    case Command::simulate: {
      Simulation sim = simulate(cfg);
      pcts::write_file(out("events.pcts"), sim.a, sim.b);
      G2Curve g2 = correlate(cfg, sim.a, sim.b);
      write_g2_csv_file(out("g2.csv"), g2);
      g2_summary(g2);
      results["events"] = {{"channel0", sim.a.times.size()}, {"channel1", sim.b.times.size()}};
      results["sampler"] = {{"candidates", sim.stats.candidates},
                            {"photons", sim.stats.photons},
                            {"clipped", sim.stats.clipped},
                            {"max_cluster", sim.stats.max_cluster}};
      results["rephase_interval_s"] = sim.rephase_interval;
      break;
    }
    case Command::correlate: {
      auto [a, b] = load_streams();
      if (cfg.duration > 0.0 && cfg.duration >= a.duration) {
        with_duration(a, cfg.duration);
        with_duration(b, cfg.duration);
      }
      G2Curve g2 = correlate(cfg, a, b);
      write_g2_csv_file(out("g2.csv"), g2);
      g2_summary(g2);
      break;
    }
    case Command::estimate: {
      G2Curve g2;
      const std::string ext = fs::path(options.input).extension().string();
      if (options.input.empty()) {
        g2 = simulate_g2(cfg);
        write_g2_csv_file(out("g2.csv"), g2);
      } else if (ext == ".csv") {
        g2 = read_g2_csv_file(options.input);
      } else {
        auto [a, b] = load_streams();
        if (cfg.duration >= a.duration) {
          with_duration(a, cfg.duration);
          with_duration(b, cfg.duration);
        }
        g2 = correlate(cfg, a, b);
        write_g2_csv_file(out("g2.csv"), g2);
      }
      estimate::BeatEstimate e = estimate::estimate_beat(g2, cfg.beat_options());
      write_estimate_csv(out("estimate.csv"), e);
      std::ostringstream rep;
      rep << std::setprecision(17) << "# beat estimate\n";
      const nlohmann::json ej = estimate_json(e);
      for (auto& [k, v] : ej.items()) rep << k << " = " << (v.is_string() ? v.get<std::string>() : v.dump()) << "\n";
      rep << "input = " << (options.input.empty() ? "simulated" : options.input) << "\n";
      rep << "config_hash = " << config::config_hash(cfg) << "\n# inputs\n" << config::canonical_text(cfg);
      write_text(out("estimate_report.txt"), rep.str());
      results["estimate"] = estimate_json(e);
      break;
    }
    case Command::sweep: {
      estimate::SweepResult r = sweep(cfg);
      std::ostringstream csv;
      csv << std::setprecision(17) << "detuning_hz,f_mod_hz,sigma_f_hz,residual\n";
      for (std::size_t i = 0; i < r.points.size(); ++i) {
        csv << r.points[i].detuning << ',' << r.points[i].estimate.f_mod << ',' << r.points[i].estimate.sigma_f << ','
            << r.residuals[i] << '\n';
      }
      write_text(out("sweep.csv"), csv.str());
      results["alpha"] = r.alpha;
      results["alpha_stderr"] = r.alpha_stderr;
      results["alpha_stderr_weights"] = r.alpha_stderr_weights;
      results["reduced_chi2"] = r.reduced_chi2();
      results["alpha_geometric"] = 2.0 * std::cos(cfg.experiment.observation_angle);
      break;
    }
    case Command::stability: {
      estimate::StabilityResult r = stability(cfg);
      std::ostringstream csv;
      csv << std::setprecision(17) << "duration_s,std_f_hz,mean_f_hz,mean_sigma_f_hz,seeds\n";
      for (const auto& row : r.rows) {
        csv << row.duration << ',' << row.std_f << ',' << row.mean_f << ',' << row.mean_sigma_f << ','
            << row.f_values.size() << '\n';
      }
      write_text(out("stability.csv"), csv.str());
      results["loglog_slope"] = r.slope;
      results["loglog_slope_stderr"] = r.slope_stderr;
      break;
    }
  }

  nlohmann::json manifest;
  manifest["command"] = command_name(command);
  manifest["version"] = THERMOBEAT_VERSION;
  manifest["seed"] = cfg.seed;
  manifest["config_hash"] = config::config_hash(cfg);
  nlohmann::json conf = nlohmann::json::object();
  std::istringstream lines(config::canonical_text(cfg));
  for (std::string line; std::getline(lines, line);) {
    auto eq = line.find(" = ");
    if (eq != std::string::npos) conf[line.substr(0, eq)] = line.substr(eq + 3);
  }
  manifest["config"] = conf;
  manifest["input"] = options.input;
  manifest["warnings"] = cfg.experiment.warnings();
  std::vector<std::string> names;
  for (const auto& p : written) names.push_back(fs::path(p).filename().string());
  manifest["outputs"] = names;
  manifest["results"] = results;
  write_text(out("manifest.json"), manifest.dump(2) + "\n");
  return written;
}

}  // namespace thermobeat::pipeline
