#include <doctest.h>

#include <cmath>
#include <string>

#include "thermobeat/config.hpp"
#include "thermobeat/errors.hpp"

using namespace thermobeat;
using namespace thermobeat::config;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("empty config takes the documented defaults") {
  RunConfig c = parse_config("");
  CHECK(c.experiment.detuning == 100e6);
  CHECK(c.experiment.observation_angle == doctest::Approx(2.0 * M_PI / 180.0));
  CHECK(c.experiment.temperature == doctest::Approx(333.15));
  CHECK(c.duration == 10.0);
  CHECK(c.bin_width == 1e-9);
  CHECK(c.tau_max == doctest::Approx(3.2e-6));
  CHECK(c.seed == 1);
  CHECK(c.engine == Engine::sparse);
  CHECK(c.coherent_mode == synth::CoherentMode::separate);
  CHECK(c.refine == estimate::Refine::fit);
  CHECK(!c.dt);
  CHECK(c.sweep_detunings.size() == 7);
  // comments and blank lines are skipped
  RunConfig d = parse_config("# header\n\n[run] ; trailing\n  seed = 7   # note\n");
  CHECK(d.seed == 7);
}

TEST_CASE("dimensioned values need units") {
  CHECK(parse_config("[experiment]\ndetuning = 100 MHz\n").experiment.detuning == 1e8);
  CHECK(parse_quantity("100MHz", "frequency") == 1e8);
  CHECK(parse_quantity("-2.5 kHz", "frequency") == -2500.0);
  CHECK(parse_quantity("500 ps", "time") == doctest::Approx(5e-10).epsilon(1e-12));
  CHECK(parse_quantity("3.2 us", "time") == doctest::Approx(3.2e-6));
  CHECK(parse_quantity("3.2 \xC2\xB5s", "time") == doctest::Approx(3.2e-6));
  CHECK(parse_quantity("60 K", "temperature") == 60.0);
  CHECK(parse_quantity("95 um", "length") == doctest::Approx(95e-6));
  CHECK(parse_quantity("86.909 u", "mass") == doctest::Approx(86.909 * 1.66053906660e-27).epsilon(1e-9));
  CHECK(parse_quantity("2 deg", "angle") == doctest::Approx(2.0 * M_PI / 180.0));
  CHECK(parse_quantity("3.2e5 /s", "rate") == 3.2e5);
  CHECK(parse_quantity("320 kcps", "rate") == 3.2e5);
  CHECK(parse_quantity("0.02", "dimensionless") == 0.02);

  CHECK_THROWS_AS(parse_quantity("100", "frequency"), ConfigError);
  CHECK_THROWS_AS(parse_quantity("100 s", "frequency"), ConfigError);
  CHECK_THROWS_AS(parse_quantity("MHz", "frequency"), ConfigError);
  CHECK_THROWS_AS(parse_quantity("1 mdeg", "angle"), ConfigError);
  CHECK_THROWS_AS(parse_quantity("0.5 Hz", "dimensionless"), ConfigError);
  CHECK_THROWS_AS(parse_quantity("", "time"), ConfigError);

  std::string msg = error_of("[run]\nduration = 10\n");
  CHECK(msg.find("line 2") != std::string::npos);
  CHECK(msg.find("run.duration") != std::string::npos);
  CHECK(msg.find("unit") != std::string::npos);
}

TEST_CASE("unknown names are rejected with the nearest match") {
  std::string msg = error_of("[experiment]\ndetunning = 100 MHz\n");
  CHECK(msg.find("line 2") != std::string::npos);
  CHECK(msg.find("'detunning'") != std::string::npos);
  CHECK(msg.find("'detuning'") != std::string::npos);

  msg = error_of("\n[detectr]\n");
  CHECK(msg.find("line 2") != std::string::npos);
  CHECK(msg.find("[detector]") != std::string::npos);

  CHECK(edit_distance("kitten", "sitting") == 3);
  CHECK(edit_distance("", "abc") == 3);
  CHECK(edit_distance("same", "same") == 0);
}

TEST_CASE("syntax errors carry the line number") {
  CHECK(error_of("seed = 3\n").find("line 1") != std::string::npos);
  CHECK(error_of("[run\n").find("line 1") != std::string::npos);
  CHECK(error_of("[run]\nseed 3\n").find("line 2") != std::string::npos);
  std::string dup = error_of("[run]\nseed = 1\n\nseed = 2\n");
  CHECK(dup.find("line 4") != std::string::npos);
  CHECK(dup.find("line 2") != std::string::npos);
  CHECK(error_of("[run]\nseed = -1\n").find("run.seed") != std::string::npos);
  CHECK(error_of("[run]\nengine = fast\n").find("sparse, trace") != std::string::npos);
}

TEST_CASE("invariant violations name the field") {
  CHECK(error_of("[run]\nduration = 0 s\n").find("run.duration") != std::string::npos);
  CHECK(error_of("[run]\ntau_max = 0.5 ns\n").find("run.tau_max") != std::string::npos);
  CHECK(error_of("[run]\nduration = 1 us\n").find("run.tau_max") != std::string::npos);
  CHECK(error_of("[forward]\nn_atoms = 0\n").find("forward.n_atoms") != std::string::npos);
  CHECK(error_of("[forward]\nrephase_interval = 1 ms\n[backward]\nrephase_interval = 2 ms\n")
            .find("backward.rephase_interval") != std::string::npos);
  CHECK(error_of("[stability]\nseeds_per_point = 1\n").find("stability.seeds_per_point") != std::string::npos);
  CHECK(!error_of("[detector]\nefficiency = 1.5\n").empty());
  CHECK(!error_of("[experiment]\ntemperature = -1 K\n").empty());
  CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), ConfigError);
}

TEST_CASE("lists, enums and derived settings") {
  RunConfig c = parse_config(
      "[sweep]\ndetunings = 40 MHz, 100MHz,160 MHz\n"
      "[stability]\ndurations = 1 s, 2 s\n"
      "[estimate]\nwindow = fixed\nwindow_half_width = 80 ns\nrefine = none\n"
      "[experiment]\nbackward_shape = voigt\n"
      "[detector]\njitter_sigma = 250 ps\n"
      "[run]\ncoherent_mode = interfering\nnormalization = plateau\nengine = trace\ndt = 0.1 ns\n");
  REQUIRE(c.sweep_detunings.size() == 3);
  CHECK(c.sweep_detunings[1] == 1e8);
  CHECK(c.stability_durations.size() == 2);
  CHECK(c.backward_shape == physics::LineShape::voigt);
  CHECK(c.coherent_mode == synth::CoherentMode::interfering);
  CHECK(c.plateau_normalization);
  CHECK(c.engine == Engine::trace);
  REQUIRE(c.dt);
  CHECK(*c.dt == doctest::Approx(1e-10));
  auto o = c.beat_options();
  CHECK(o.window == estimate::WindowMode::fixed);
  CHECK(o.fixed_half_width == doctest::Approx(80e-9));
  CHECK(o.refine == estimate::Refine::none);
  CHECK(o.jitter_sigma == doctest::Approx(250e-12));

  // default rephase interval follows the longest coherence time, capped by the run
  RunConfig d = parse_config("");
  CHECK(d.rephase_interval() > 0.0);
  CHECK(d.rephase_interval() <= d.duration);
  RunConfig e = parse_config("[forward]\nrephase_interval = 1 ms\n");
  auto [ef, eb] = e.ensembles();
  CHECK(ef.rephase_interval == doctest::Approx(1e-3));
  CHECK(eb.rephase_interval == doctest::Approx(1e-3));
  CHECK(ef.mean_amplitude == doctest::Approx(std::sqrt(3.2e5)));
}

TEST_CASE("canonical text and hash") {
  RunConfig a = parse_config("[experiment]\ndetuning = 100 MHz\n");
  RunConfig b = parse_config("");
  CHECK(canonical_text(a) == canonical_text(b));
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  RunConfig c = parse_config("[experiment]\ndetuning = 100.001 MHz\n");
  CHECK(config_hash(c) != config_hash(a));
  RunConfig d = parse_config("[run]\nseed = 2\n");
  CHECK(config_hash(d) != config_hash(a));
  // every section appears in the canonical text
  std::string t = canonical_text(b);
  for (const char* key : {"experiment.detuning", "transition.wavelength", "forward.n_atoms", "detector.jitter_sigma",
                          "run.bin_width", "estimate.refine", "sweep.detunings", "stability.durations"}) {
    CHECK(t.find(key) != std::string::npos);
  }
}
