#include "thermobeat/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

#include "thermobeat/errors.hpp"
#include "thermobeat/units.hpp"

namespace thermobeat::config {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

double si_prefix(char c) {
  switch (c) {
    case 'T': return 1e12;
    case 'G': return 1e9;
    case 'M': return 1e6;
    case 'k': return 1e3;
    case 'm': return 1e-3;
    case 'u': return 1e-6;
    case 'n': return 1e-9;
    case 'p': return 1e-12;
    case 'f': return 1e-15;
    default: return 0.0;
  }
}

// Base units accepted per dimension and their factor to SI.
const std::map<std::string, std::map<std::string, double>>& unit_table() {
  static const std::map<std::string, std::map<std::string, double>> table{
      {"frequency", {{"Hz", 1.0}}},
      {"rate", {{"Hz", 1.0}, {"/s", 1.0}, {"1/s", 1.0}, {"cps", 1.0}, {"counts/s", 1.0}}},
      {"time", {{"s", 1.0}}},
      {"temperature", {{"K", 1.0}}},
      {"length", {{"m", 1.0}}},
      {"mass", {{"kg", 1.0}, {"g", 1e-3}, {"u", constants::atomic_mass_unit}, {"Da", constants::atomic_mass_unit}}},
      {"angle", {{"rad", 1.0}, {"deg", constants::pi / 180.0}}},
  };
  return table;
}

double unit_factor(const std::string& unit, const std::string& dimension) {
  const auto& units = unit_table().at(dimension);
  if (auto it = units.find(unit); it != units.end()) return it->second;
  // prefixed forms, except for the atomic mass unit and degrees
  std::string u = unit;
  if (u.rfind("\xC2\xB5", 0) == 0) u = "u" + u.substr(2);
  if (u.size() >= 2) {
    double p = si_prefix(u[0]);
    std::string base = u.substr(1);
    if (base == "kg") return 0.0;
    if (p > 0.0 && base != "u" && base != "Da" && base != "deg") {
      if (auto it = units.find(base); it != units.end()) return p * it->second;
    }
  }
  return 0.0;
}

}  // namespace

double parse_quantity(const std::string& text, const std::string& dimension) {
  std::string s = trim(text);
  if (s.empty()) throw ConfigError("empty value");
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || !std::isfinite(v)) throw ConfigError("'" + s + "' does not start with a number");
  std::string unit = trim(std::string(ptr, static_cast<const char*>(s.data() + s.size())));
  if (dimension == "dimensionless") {
    if (!unit.empty()) throw ConfigError("'" + s + "' must be a plain number");
    return v;
  }
  if (unit.empty()) throw ConfigError("'" + s + "' needs a " + dimension + " unit");
  double f = unit_factor(unit, dimension);
  if (f == 0.0) throw ConfigError("unit '" + unit + "' is not a " + dimension + " unit");
  return v * f;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

namespace {

using Setter = std::function<void(RunConfig&, const std::string&)>;

std::uint64_t parse_uint(const std::string& v) {
  std::string s = trim(v);
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) throw ConfigError("'" + s + "' is not a non-negative integer");
  return out;
}

template <class E>
E parse_enum(const std::string& v, const std::vector<std::pair<std::string, E>>& options) {
  std::string s = trim(v);
  std::string names;
  for (const auto& [name, value] : options) {
    if (s == name) return value;
    names += (names.empty() ? "" : ", ") + name;
  }
  throw ConfigError("'" + s + "' is not one of " + names);
}

Setter quantity(double RunConfig::*field, const char* dim) {
  return [field, dim](RunConfig& c, const std::string& v) { c.*field = parse_quantity(v, dim); };
}

template <class F>
Setter on_experiment(F field, const char* dim) {
  return [field, dim](RunConfig& c, const std::string& v) { c.experiment.*field = parse_quantity(v, dim); };
}

template <class F>
Setter on_transition(F field, const char* dim) {
  return [field, dim](RunConfig& c, const std::string& v) { c.experiment.transition.*field = parse_quantity(v, dim); };
}

template <class F>
Setter on_detector(F field, const char* dim) {
  return [field, dim](RunConfig& c, const std::string& v) { c.detector.*field = parse_quantity(v, dim); };
}

Setter on_ensemble(EnsembleConfig RunConfig::*which, bool atoms) {
  return [which, atoms](RunConfig& c, const std::string& v) {
    if (atoms) {
      (c.*which).n_atoms = static_cast<std::size_t>(parse_uint(v));
    } else {
      (c.*which).rephase_interval = parse_quantity(v, "time");
    }
  };
}

Setter list_of(std::vector<double> RunConfig::*field, const char* dim) {
  return [field, dim](RunConfig& c, const std::string& v) {
    std::vector<double> out;
    for (const auto& item : split_list(v)) out.push_back(parse_quantity(item, dim));
    if (out.empty()) throw ConfigError("empty list");
    c.*field = out;
  };
}

const std::map<std::string, std::map<std::string, Setter>>& schema() {
  using physics::ExperimentParams;
  using physics::Transition;
  using detect::DetectorSpec;
  static const std::map<std::string, std::map<std::string, Setter>> s{
      {"experiment",
       {{"detuning", on_experiment(&ExperimentParams::detuning, "frequency")},
        {"observation_angle", on_experiment(&ExperimentParams::observation_angle, "angle")},
        {"temperature", on_experiment(&ExperimentParams::temperature, "temperature")},
        {"rate_forward", on_experiment(&ExperimentParams::rate_forward, "rate")},
        {"rate_backward", on_experiment(&ExperimentParams::rate_backward, "rate")},
        {"coherent_ratio", on_experiment(&ExperimentParams::coherent_ratio, "dimensionless")},
        {"beam_waist_excitation", on_experiment(&ExperimentParams::beam_waist_excitation, "length")},
        {"waist_observation", on_experiment(&ExperimentParams::waist_observation, "length")},
        {"backward_shape", [](RunConfig& c, const std::string& v) {
           c.backward_shape = parse_enum<physics::LineShape>(
               v, {{"gaussian", physics::LineShape::gaussian}, {"voigt", physics::LineShape::voigt}});
         }}}},
      {"transition",
       {{"rest_frequency", on_transition(&Transition::rest_frequency, "frequency")},
        {"natural_linewidth", on_transition(&Transition::natural_linewidth, "frequency")},
        {"wavelength", on_transition(&Transition::wavelength, "length")},
        {"atomic_mass", on_transition(&Transition::atomic_mass, "mass")}}},
      {"forward",
       {{"n_atoms", on_ensemble(&RunConfig::forward, true)},
        {"rephase_interval", on_ensemble(&RunConfig::forward, false)}}},
      {"backward",
       {{"n_atoms", on_ensemble(&RunConfig::backward, true)},
        {"rephase_interval", on_ensemble(&RunConfig::backward, false)}}},
      {"detector",
       {{"efficiency", on_detector(&DetectorSpec::efficiency, "dimensionless")},
        {"dark_rate", on_detector(&DetectorSpec::dark_rate, "rate")},
        {"jitter_sigma", on_detector(&DetectorSpec::jitter_sigma, "time")},
        {"dead_time", on_detector(&DetectorSpec::dead_time, "time")},
        {"splitter_ratio", on_detector(&DetectorSpec::splitter_ratio, "dimensionless")}}},
      {"run",
       {{"duration", quantity(&RunConfig::duration, "time")},
        {"dt", [](RunConfig& c, const std::string& v) { c.dt = parse_quantity(v, "time"); }},
        {"bin_width", quantity(&RunConfig::bin_width, "time")},
        {"tau_max", quantity(&RunConfig::tau_max, "time")},
        {"seed", [](RunConfig& c, const std::string& v) { c.seed = parse_uint(v); }},
        {"output_dir", [](RunConfig& c, const std::string& v) { c.output_dir = trim(v); }},
        {"engine", [](RunConfig& c, const std::string& v) {
           c.engine = parse_enum<Engine>(v, {{"sparse", Engine::sparse}, {"trace", Engine::trace}});
         }},
        {"coherent_mode", [](RunConfig& c, const std::string& v) {
           c.coherent_mode = parse_enum<synth::CoherentMode>(
               v, {{"separate", synth::CoherentMode::separate}, {"interfering", synth::CoherentMode::interfering}});
         }},
        {"normalization", [](RunConfig& c, const std::string& v) {
           c.plateau_normalization = parse_enum<bool>(v, {{"rates", false}, {"plateau", true}});
         }},
        {"threads", [](RunConfig& c, const std::string& v) { c.threads = static_cast<unsigned>(parse_uint(v)); }}}},
      {"estimate",
       {{"window", [](RunConfig& c, const std::string& v) {
           c.window = parse_enum<estimate::WindowMode>(v, {{"adaptive", estimate::WindowMode::adaptive},
                                                           {"full", estimate::WindowMode::full},
                                                           {"fixed", estimate::WindowMode::fixed}});
         }},
        {"window_half_width", quantity(&RunConfig::window_half_width, "time")},
        {"refine", [](RunConfig& c, const std::string& v) {
           c.refine = parse_enum<estimate::Refine>(v, {{"fit", estimate::Refine::fit}, {"none", estimate::Refine::none}});
         }}}},
      {"sweep", {{"detunings", list_of(&RunConfig::sweep_detunings, "frequency")}}},
      {"stability",
       {{"durations", list_of(&RunConfig::stability_durations, "time")},
        {"seeds_per_point", [](RunConfig& c, const std::string& v) {
           c.seeds_per_point = static_cast<std::size_t>(parse_uint(v));
         }}}},
  };
  return s;
}

template <class Map>
std::string nearest(const std::string& name, const Map& options) {
  std::string best;
  std::size_t best_d = SIZE_MAX;
  for (const auto& [key, unused] : options) {
    std::size_t d = edit_distance(name, key);
    if (d < best_d) {
      best_d = d;
      best = key;
    }
  }
  return best;
}

std::string line_prefix(std::size_t line) { return "line " + std::to_string(line) + ": "; }

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  const auto& s = schema();
  std::string section;
  std::map<std::string, std::size_t> seen;
  std::stringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    if (auto c = line.find_first_of("#;"); c != std::string::npos) line = line.substr(0, c);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(line_prefix(lineno) + "malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (!s.count(section)) {
        throw ConfigError(line_prefix(lineno) + "unknown section [" + section + "]; did you mean [" +
                          nearest(section, s) + "]?");
      }
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line_prefix(lineno) + "expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigError(line_prefix(lineno) + "key '" + key + "' outside any section");
    const auto& keys = s.at(section);
    auto it = keys.find(key);
    if (it == keys.end()) {
      throw ConfigError(line_prefix(lineno) + "unknown key '" + key + "' in [" + section + "]; did you mean '" +
                        nearest(key, keys) + "'?");
    }
    std::string path = section + "." + key;
    if (auto prev = seen.find(path); prev != seen.end()) {
      throw ConfigError(line_prefix(lineno) + path + " already set on line " + std::to_string(prev->second));
    }
    seen[path] = lineno;
    try {
      it->second(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(line_prefix(lineno) + path + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

void RunConfig::validate() const {
  auto fail = [](const std::string& path, const std::string& why) { throw ConfigError(path + ": " + why); };
  try {
    experiment.validate();
    detector.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  if (!(duration > 0.0)) fail("run.duration", "must be positive");
  if (dt && !(*dt > 0.0)) fail("run.dt", "must be positive");
  if (!(bin_width > 0.0)) fail("run.bin_width", "must be positive");
  if (!(tau_max >= bin_width)) fail("run.tau_max", "must be at least run.bin_width");
  if (!(tau_max < duration)) fail("run.tau_max", "must be shorter than run.duration");
  if (forward.n_atoms < 1) fail("forward.n_atoms", "must be at least 1");
  if (backward.n_atoms < 1) fail("backward.n_atoms", "must be at least 1");
  if (forward.rephase_interval && !(*forward.rephase_interval > 0.0)) fail("forward.rephase_interval", "must be positive");
  if (backward.rephase_interval && !(*backward.rephase_interval > 0.0)) fail("backward.rephase_interval", "must be positive");
  if (forward.rephase_interval && backward.rephase_interval && *forward.rephase_interval != *backward.rephase_interval) {
    fail("backward.rephase_interval", "must equal forward.rephase_interval (phases re-randomize jointly)");
  }
  if (threads < 1) fail("run.threads", "must be at least 1");
  if (!(window_half_width > 0.0)) fail("estimate.window_half_width", "must be positive");
  if (seeds_per_point < 2) fail("stability.seeds_per_point", "must be at least 2");
  for (double d : stability_durations) {
    if (!(d > tau_max)) fail("stability.durations", "every duration must exceed run.tau_max");
  }
}

double RunConfig::rephase_interval() const {
  if (forward.rephase_interval) return *forward.rephase_interval;
  if (backward.rephase_interval) return *backward.rephase_interval;
  auto [f, b] = physics::channel_models(experiment, backward_shape);
  double longest = 0.0;
  if (experiment.rate_forward > 0.0) longest = std::max(longest, f.coherence_time());
  if (experiment.rate_backward > 0.0) longest = std::max(longest, b.coherence_time());
  return std::min(20.0 * longest, duration);
}

std::pair<synth::EnsembleSpec, synth::EnsembleSpec> RunConfig::ensembles() const {
  auto [f, b] = physics::channel_models(experiment, backward_shape);
  synth::EnsembleSpec ef, eb;
  ef.spectral_model = f;
  eb.spectral_model = b;
  ef.n_atoms = forward.n_atoms;
  eb.n_atoms = backward.n_atoms;
  ef.mean_amplitude = std::sqrt(experiment.rate_forward);
  eb.mean_amplitude = std::sqrt(experiment.rate_backward);
  ef.rephase_interval = eb.rephase_interval = rephase_interval();
  return {ef, eb};
}

estimate::BeatOptions RunConfig::beat_options() const {
  estimate::BeatOptions o;
  o.window = window;
  o.fixed_half_width = window_half_width;
  o.refine = refine;
  o.jitter_sigma = detector.jitter_sigma;
  o.theta = experiment.observation_angle;
  return o;
}

std::string canonical_text(const RunConfig& c) {
  std::ostringstream os;
  os << std::setprecision(17);
  const auto& e = c.experiment;
  const auto& t = e.transition;
  os << "experiment.detuning = " << e.detuning << "\n"
     << "experiment.observation_angle = " << e.observation_angle << "\n"
     << "experiment.temperature = " << e.temperature << "\n"
     << "experiment.rate_forward = " << e.rate_forward << "\n"
     << "experiment.rate_backward = " << e.rate_backward << "\n"
     << "experiment.coherent_ratio = " << e.coherent_ratio << "\n"
     << "experiment.beam_waist_excitation = " << e.beam_waist_excitation << "\n"
     << "experiment.waist_observation = " << e.waist_observation << "\n"
     << "experiment.backward_shape = " << (c.backward_shape == physics::LineShape::gaussian ? "gaussian" : "voigt") << "\n"
     << "transition.rest_frequency = " << t.rest_frequency << "\n"
     << "transition.natural_linewidth = " << t.natural_linewidth << "\n"
     << "transition.wavelength = " << t.wavelength << "\n"
     << "transition.atomic_mass = " << t.atomic_mass << "\n"
     << "forward.n_atoms = " << c.forward.n_atoms << "\n"
     << "backward.n_atoms = " << c.backward.n_atoms << "\n"
     << "ensemble.rephase_interval = " << c.rephase_interval() << "\n"
     << "detector.efficiency = " << c.detector.efficiency << "\n"
     << "detector.dark_rate = " << c.detector.dark_rate << "\n"
     << "detector.jitter_sigma = " << c.detector.jitter_sigma << "\n"
     << "detector.dead_time = " << c.detector.dead_time << "\n"
     << "detector.splitter_ratio = " << c.detector.splitter_ratio << "\n"
     << "run.duration = " << c.duration << "\n"
     << "run.dt = ";
  if (c.dt) {
    os << *c.dt;
  } else {
    os << "auto";
  }
  os << "\n"
     << "run.bin_width = " << c.bin_width << "\n"
     << "run.tau_max = " << c.tau_max << "\n"
     << "run.seed = " << c.seed << "\n"
     << "run.engine = " << (c.engine == Engine::sparse ? "sparse" : "trace") << "\n"
     << "run.coherent_mode = " << (c.coherent_mode == synth::CoherentMode::separate ? "separate" : "interfering") << "\n"
     << "run.normalization = " << (c.plateau_normalization ? "plateau" : "rates") << "\n"
     << "estimate.window = "
     << (c.window == estimate::WindowMode::adaptive ? "adaptive" : c.window == estimate::WindowMode::full ? "full" : "fixed")
     << "\n"
     << "estimate.window_half_width = " << c.window_half_width << "\n"
     << "estimate.refine = " << (c.refine == estimate::Refine::fit ? "fit" : "none") << "\n";
  os << "sweep.detunings =";
  for (double d : c.sweep_detunings) os << ' ' << d;
  os << "\nstability.durations =";
  for (double d : c.stability_durations) os << ' ' << d;
  os << "\nstability.seeds_per_point = " << c.seeds_per_point << "\n";
  return os.str();
}

std::string config_hash(const RunConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_text(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace thermobeat::config
