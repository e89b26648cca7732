// End-to-end acceptance checks, one PASS/FAIL line per criterion.
//   acceptance            all criteria
//   acceptance 2 7        selected ones
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "thermobeat/config.hpp"
#include "thermobeat/correlate.hpp"
#include "thermobeat/errors.hpp"
#include "thermobeat/estimate.hpp"
#include "thermobeat/physics.hpp"
#include "thermobeat/pipeline.hpp"
#include "thermobeat/random.hpp"
#include "thermobeat/sampler.hpp"
#include "thermobeat/synth.hpp"
#include "thermobeat/units.hpp"

using namespace thermobeat;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double pi = constants::pi;
const double theta = 2.0 * pi / 180.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Ideal detectors, frozen velocity classes rephased every millisecond.
config::RunConfig base_config() {
  return config::parse_config(
      "[forward]\nn_atoms = 100000\nrephase_interval = 1 ms\n"
      "[backward]\nn_atoms = 100000\n"
      "[detector]\njitter_sigma = 0 s\n"
      "[run]\nduration = 10 s\n");
}

/// Photon ticks of one chaotic class with a Gaussian line of width sigma,
/// plus a non-interfering coherent part of r times the chaotic rate.
std::vector<std::int64_t> single_class_photons(double sigma, std::size_t n_atoms, double rate, double r,
                                               double duration, std::uint64_t seed) {
  synth::EnsembleSpec spec;
  spec.spectral_model.gaussian_sigma = sigma;
  spec.n_atoms = n_atoms;
  spec.mean_amplitude = std::sqrt(rate);
  spec.rephase_interval = 1e-3;
  synth::AtomSet atoms = synth::sample_atom_set(spec, seed);
  synth::FieldKernel kernel(atoms, {}, 0.0, spec.spectral_model.envelope_extent(1e-4));
  synth::SamplerInput in;
  in.kernel = &kernel;
  in.coherent_amplitude = std::sqrt(r * rate);
  in.duration = duration;
  in.rephase_interval = spec.rephase_interval;
  in.seed = seed;
  return synth::sample_photons(in);
}

Outcome chaotic_bunching() {
  const double sigma = 9.6e6, rate = 1.28e6, duration = 10.0;
  std::ostringstream os;
  bool ok = true;
  for (double r : {0.0, 0.02}) {
    auto t0 = Clock::now();
    auto ticks = single_class_photons(sigma, 10000, rate, r, duration, 11);
    auto [a, b] = detect::detect_photons(ticks, duration, detect::DetectorSpec::ideal(), 11);
    G2Curve g2 = correlate::compute_g2(a, b, 1e-9, 3.2e-6);
    double runtime = seconds_since(t0);

    physics::ExperimentParams init;
    init.rate_forward = rate;
    init.rate_backward = 0.0;
    estimate::FitOptions fo;
    fo.tau_limit = 200e-9;
    estimate::InterferenceFit fit = estimate::fit_interference(g2, init, fo);
    const double want = physics::g20_from_r(r);
    const double tol = r == 0.0 ? 0.05 : 0.010;
    bool this_ok = std::abs(fit.g2_zero - want) <= tol && g2.total_coincidences >= 100000 && runtime <= 120.0;
    ok = ok && this_ok;
    char buf[320];
    std::snprintf(buf, sizeof buf,
                  "r=%.2f: g2(0)=%.4f+-%.4f want %.3f+-%.3f (zero-lag bin %.3f, sigma_fit %.2f MHz, %llu pairs, %.0f s); ",
                  r, fit.g2_zero, fit.g2_zero_stderr(), want, tol, g2.values[g2.centre_index()],
                  fit.sigma_forward / 1e6, static_cast<unsigned long long>(g2.total_coincidences), runtime);
    os << buf;
  }
  return {ok, os.str()};
}

Outcome beat_recovery() {
  auto cfg = base_config();
  auto t0 = Clock::now();
  G2Curve g2 = pipeline::simulate_g2(cfg);
  estimate::BeatEstimate e = estimate::estimate_beat(g2, cfg.beat_options());
  double runtime = seconds_since(t0);
  const double truth = physics::beat_frequency(100e6, theta);
  double rate = g2.rates.first + g2.rates.second;
  bool ok = std::abs(e.f_mod - truth) <= 0.3e6 && std::abs(e.detuning_abs - 100e6) < 0.5e6 && runtime <= 300.0;
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "f_mod=%.4f MHz want %.4f+-0.3 (error %+.3f, reported sigma %.3f MHz, %s), detuning %.3f MHz, %.3g counts/s, %.0f s",
                e.f_mod / 1e6, truth / 1e6, (e.f_mod - truth) / 1e6, e.sigma_f / 1e6, e.method.c_str(),
                e.detuning_abs / 1e6, rate, runtime);
  return {ok, buf};
}

Outcome linearity() {
  auto cfg = base_config();
  cfg.bin_width = 0.5e-9;
  cfg.sweep_detunings = {40e6, 60e6, 80e6, 100e6, 120e6, 140e6, 160e6};
  estimate::SweepResult s = pipeline::sweep(cfg);
  const double want = 2.0 * std::cos(theta);
  bool ok = std::abs(s.alpha - want) <= 0.005 && s.reduced_chi2() < 2.0;
  char buf[256];
  std::snprintf(buf, sizeof buf, "alpha=%.5f+-%.5f want %.5f+-0.005, reduced chi2 %.2f (dof %zu) want < 2", s.alpha,
                s.alpha_stderr_weights, want, s.reduced_chi2(), s.dof);
  return {ok, buf};
}

Outcome visibility_law() {
  std::ostringstream os;
  bool ok = true;
  for (double rho : {10.0 / 54.0, 1.0}) {
    auto cfg = base_config();
    // visibility stderr ~0.0235 at 10 s; 3 sigma inside the tolerance needs > 125 s
    cfg.duration = rho < 1.0 ? 160.0 : 40.0;
    const double total = 6.4e5;
    cfg.experiment.rate_forward = total / (1.0 + rho);
    cfg.experiment.rate_backward = total * rho / (1.0 + rho);
    G2Curve g2 = pipeline::simulate_g2(cfg);
    estimate::InterferenceFit fit = estimate::fit_interference(g2, cfg.experiment);
    bool this_ok;
    char buf[200];
    if (rho < 1.0) {
      const double want = physics::visibility_from_ratio(rho);
      this_ok = std::abs(fit.visibility - want) <= 0.02;
      std::snprintf(buf, sizeof buf, "54:10: V=%.4f+-%.4f want %.3f+-0.02 (rho %.4f); ", fit.visibility,
                    fit.visibility_stderr(), want, fit.rho);
    } else {
      this_ok = fit.visibility >= 0.95;
      std::snprintf(buf, sizeof buf, "balanced: V=%.4f+-%.4f want >= 0.95 (rho %.4f)", fit.visibility,
                    fit.visibility_stderr(), fit.rho);
    }
    ok = ok && this_ok;
    os << buf;
  }
  return {ok, os.str()};
}

Outcome siegert_oracle() {
  auto cfg = base_config();
  cfg.duration = 5.0;
  cfg.experiment.coherent_ratio = 0.02;
  const int seeds = 20;
  double worst_res = 0.0, lo = 1e9, hi = 0.0;
  int good = 0;
  for (int s = 1; s <= seeds; ++s) {
    cfg.seed = static_cast<std::uint64_t>(s);
    G2Curve g2 = pipeline::simulate_g2(cfg);
    G2Curve model = physics::predict_g2_binned(pipeline::channel_mix(cfg), g2.tau, g2.bin_width);
    correlate::ResidualReport rep = correlate::compare_g2(g2, model);
    double rc = rep.reduced_chi2();
    worst_res = std::max(worst_res, rep.max_abs_residual);
    lo = std::min(lo, rc);
    hi = std::max(hi, rc);
    if (rep.max_abs_residual < 5.0 && rc >= 0.7 && rc <= 1.5) ++good;
  }
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%d/%d seeds consistent; max |residual| %.2f want < 5, reduced chi2 in [%.3f, %.3f] want [0.7, 1.5]",
                good, seeds, worst_res, lo, hi);
  return {good == seeds, buf};
}

Outcome stability_scaling() {
  auto cfg = base_config();
  cfg.stability_durations = {1.0, 4.0, 16.0, 64.0};
  cfg.seeds_per_point = 8;
  estimate::StabilityResult r = pipeline::stability(cfg);
  std::ostringstream os;
  char buf[200];
  std::snprintf(buf, sizeof buf, "slope %.3f+-%.3f want -0.5+-0.1; std_f [MHz]", r.slope, r.slope_stderr);
  os << buf;
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof buf, " T=%gs:%.3f", row.duration, row.std_f / 1e6);
    os << buf;
  }
  return {std::abs(r.slope + 0.5) <= 0.1, os.str()};
}

// Reference histogram by checking every pair.
std::vector<std::uint64_t> brute_force(const detect::TimestampStream& a, const detect::TimestampStream& b,
                                       std::int64_t w, long half_bins) {
  std::vector<std::uint64_t> counts(2 * half_bins + 1, 0);
  for (std::int64_t ta : a.times) {
    for (std::int64_t tb : b.times) {
      long k = correlate::bin_index(tb - ta, w, half_bins);
      if (k >= 0) ++counts[static_cast<std::size_t>(k)];
    }
  }
  return counts;
}

detect::TimestampStream random_stream(Rng& rng, std::size_t n, std::int64_t span, std::int64_t grid, int channel) {
  // grid-aligned ticks put many lags exactly on bin edges
  std::set<std::int64_t> ticks;
  std::uniform_int_distribution<std::int64_t> pos(0, span / grid);
  std::bernoulli_distribution burst(0.3);
  while (ticks.size() < n) {
    std::int64_t t = pos(rng) * grid;
    ticks.insert(t);
    if (burst(rng) && ticks.size() < n) ticks.insert(std::min(span, t + grid));
  }
  detect::TimestampStream s;
  s.channel = channel;
  s.times.assign(ticks.begin(), ticks.end());
  s.duration = static_cast<double>(span) * 1e-12;
  return s;
}

Outcome correlator_exactness() {
  Rng rng = make_rng(2024, Stream::trace_events);
  int exact = 0, chunk_identical = 0;
  const int pairs = 200;
  std::size_t largest = 0;
  for (int i = 0; i < pairs; ++i) {
    std::int64_t w = std::uniform_int_distribution<std::int64_t>(1, 2000)(rng);
    long half_bins = std::uniform_int_distribution<long>(1, 400)(rng);
    std::int64_t grid = std::max<std::int64_t>(1, w / 2);
    std::int64_t span = std::uniform_int_distribution<std::int64_t>(w * half_bins, 40 * w * half_bins + 10000)(rng);
    std::size_t na = std::uniform_int_distribution<std::size_t>(0, 10000)(rng);
    std::size_t nb = std::uniform_int_distribution<std::size_t>(1, 10000)(rng);
    na = std::min<std::size_t>(na, static_cast<std::size_t>(span / grid) / 2);
    nb = std::min<std::size_t>(nb, static_cast<std::size_t>(span / grid) / 2);
    auto a = random_stream(rng, na, span, grid, 0);
    auto b = random_stream(rng, std::max<std::size_t>(nb, 1), span, grid, 1);
    largest = std::max({largest, a.times.size(), b.times.size()});
    const double bw = static_cast<double>(w) * 1e-12;
    const double tmax = static_cast<double>(w * half_bins) * 1e-12;
    auto ref = brute_force(a, b, w, half_bins);
    auto h1 = correlate::coincidence_histogram(a, b, bw, tmax, {1, 1});
    if (h1.counts == ref) ++exact;
    auto h2 = correlate::coincidence_histogram(a, b, bw, tmax, {2, 2});
    auto h8 = correlate::coincidence_histogram(a, b, bw, tmax, {8, 3});
    if (h2.counts == h1.counts && h8.counts == h1.counts) ++chunk_identical;
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "%d/%d pairs equal the all-pairs count, %d/%d identical under 1/2/8 chunks (<= %zu events)",
                exact, pairs, chunk_identical, pairs, largest);
  return {exact == pairs && chunk_identical == pairs, buf};
}

Outcome width_formulas() {
  const double sigma = 9.6e6;
  synth::EnsembleSpec spec;
  spec.spectral_model.gaussian_sigma = sigma;
  spec.n_atoms = 10000;
  spec.mean_amplitude = 1.0;
  spec.rephase_interval = 1e-5;
  synth::AtomSet atoms = synth::sample_atom_set(spec, 8);
  double dt = 1.0 / (8.0 * synth::spectral_extent(atoms, {}, 0.0));
  synth::FieldTrace trace = synth::synthesize_field(atoms, {}, 0.0, 0.0, 4e-4, dt, spec.rephase_interval, 8);
  G1Curve g1 = synth::field_g1(trace, 80e-9);
  double worst = 0.0, num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < g1.tau.size(); ++i) {
    double t = g1.tau[i];
    double model = std::exp(-2.0 * pi * pi * sigma * sigma * t * t);
    if (model < 0.05) break;
    worst = std::max(worst, std::abs(g1.magnitude[i] - model));
    if (i > 0) {
      num += -t * t * std::log(g1.magnitude[i]);
      den += 2.0 * pi * pi * t * t * t * t;
    }
  }
  double sigma_fit = std::sqrt(num / den);

  const double gamma = 6.07e6;
  double sb = physics::sigma_backward(sigma / std::sin(theta), theta, gamma);
  bool ok = worst <= 0.03 && std::abs(sigma_fit / sigma - 1.0) <= 0.03 && std::abs(sb - 15.5e6) <= 0.05e6 &&
            std::abs(sb / 15.8e6 - 1.0) <= 0.05;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "max |g1 - model| %.4f want <= 0.03, fitted width %.3f MHz (%.2f%%); sigma_B %.3f MHz want 15.5, "
                "%.1f%% from 15.8",
                worst, sigma_fit / 1e6, 100.0 * (sigma_fit / sigma - 1.0), sb / 1e6, 100.0 * (sb / 15.8e6 - 1.0));
  return {ok, buf};
}

Outcome jitter_attenuation() {
  // One photon record, detected with each jitter setting. Routing and the
  // unit normal draws are shared, so the amplitude ratios see little noise.
  auto cfg = base_config();
  const double f = 200e6;
  cfg.experiment.detuning = f / (2.0 * std::cos(theta));
  cfg.experiment.rate_forward = 2.56e6;
  cfg.experiment.rate_backward = 2.56e6;
  auto [ef, eb] = cfg.ensembles();
  synth::AtomSet af = synth::sample_atom_set(ef, cfg.seed, Stream::forward_atoms);
  synth::AtomSet ab = synth::sample_atom_set(eb, cfg.seed, Stream::backward_atoms);
  double extent = std::max(ef.spectral_model.envelope_extent(1e-4), eb.spectral_model.envelope_extent(1e-4));
  synth::FieldKernel kernel(af, ab, 0.0, extent);
  synth::SamplerInput in;
  in.kernel = &kernel;
  in.duration = cfg.duration;
  in.rephase_interval = cfg.rephase_interval();
  in.seed = cfg.seed;
  auto ticks = synth::sample_photons(in);

  estimate::BeatOptions opt;
  opt.refine = estimate::Refine::none;
  opt.window = estimate::WindowMode::fixed;
  opt.fixed_half_width = 100e-9;
  double base = 0.0;
  bool ok = true;
  std::ostringstream os;
  for (double sj : {0.0, 250e-12, 500e-12, 1000e-12}) {
    detect::DetectorSpec det = detect::DetectorSpec::ideal();
    det.jitter_sigma = sj;
    auto [a, b] = detect::detect_photons(ticks, cfg.duration, det, cfg.seed);
    G2Curve g2 = correlate::compute_g2(a, b, cfg.bin_width, cfg.tau_max);
    estimate::BeatEstimate e = estimate::estimate_beat(g2, opt);
    if (sj == 0.0) base = e.peak_magnitude;
    double ratio = e.peak_magnitude / base;
    double want = std::exp(-std::pow(2.0 * pi * f * sj, 2));
    ok = ok && std::abs(ratio / want - 1.0) <= 0.10;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s%.0f ps: %.4f want %.4f (%+.1f%%, SNR %.0f)", sj == 0.0 ? "" : "; ", sj * 1e12,
                  ratio, want, 100.0 * (ratio / want - 1.0), e.peak_magnitude / e.noise_floor);
    os << buf;
  }
  return {ok, os.str()};
}

const std::map<int, std::pair<const char*, std::function<Outcome()>>>& criteria() {
  static const std::map<int, std::pair<const char*, std::function<Outcome()>>> c{
      {1, {"chaotic bunching", chaotic_bunching}},
      {2, {"beat recovery", beat_recovery}},
      {3, {"linearity", linearity}},
      {4, {"visibility law", visibility_law}},
      {5, {"extended Siegert oracle", siegert_oracle}},
      {6, {"stability scaling", stability_scaling}},
      {7, {"correlator exactness", correlator_exactness}},
      {8, {"width formulas", width_formulas}},
      {9, {"jitter attenuation", jitter_attenuation}},
  };
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty()) {
    for (const auto& [id, unused] : criteria()) selected.push_back(id);
  }
  int failed = 0;
  for (int id : selected) {
    auto it = criteria().find(id);
    if (it == criteria().end()) {
      std::cerr << "no criterion " << id << "\n";
      return 2;
    }
    auto t0 = Clock::now();
    Outcome o;
    try {
      o = it->second.second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %d %s: %s [%.0f s]\n", o.pass ? "PASS" : "FAIL", id, it->second.first, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
