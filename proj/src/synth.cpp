#include "thermobeat/synth.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "thermobeat/errors.hpp"
#include "thermobeat/units.hpp"

namespace thermobeat::synth {

using constants::two_pi;

void EnsembleSpec::validate() const {
  spectral_model.validate();
  if (n_atoms < 1) throw DomainError("ensemble n_atoms must be at least 1");
  if (!(mean_amplitude >= 0.0) || !std::isfinite(mean_amplitude)) {
    throw DomainError("ensemble mean_amplitude must be non-negative");
  }
  if (!(rephase_interval > 0.0)) throw DomainError("ensemble rephase_interval must be positive");
}

double AtomSet::power() const {
  double p = 0.0;
  for (double a : amplitudes) p += a * a;
  return p;
}

AtomSet sample_atom_set(const EnsembleSpec& spec, std::uint64_t seed, Stream stream) {
  spec.validate();
  const auto& m = spec.spectral_model;
  Rng rng = make_rng(seed, stream, 0);
  AtomSet set;
  set.frequencies.resize(spec.n_atoms, m.center_offset);
  set.phases.resize(spec.n_atoms);
  set.amplitudes.assign(spec.n_atoms, spec.mean_amplitude / std::sqrt(static_cast<double>(spec.n_atoms)));
  if (m.gaussian_sigma > 0.0) {
    std::normal_distribution<double> normal(0.0, m.gaussian_sigma);
    for (double& f : set.frequencies) f += normal(rng);
  }
  if (m.shape == physics::LineShape::voigt && m.lorentzian_hwhm > 0.0) {
    std::cauchy_distribution<double> cauchy(0.0, m.lorentzian_hwhm);
    for (double& f : set.frequencies) f += cauchy(rng);
  }
  for (double& p : set.phases) {
    p = two_pi * uniform01(rng);
    if (p >= two_pi) p = 0.0;
  }
  return set;
}

namespace {

double quantile(std::vector<double> v, double q) {
  auto k = static_cast<std::size_t>(q * static_cast<double>(v.size() - 1));
  std::nth_element(v.begin(), v.begin() + static_cast<long>(k), v.end());
  return v[k];
}

struct ClassShape {
  double centre = 0.0;
  double spread = 0.0;  // robust sigma
};

ClassShape class_shape(const AtomSet& set) {
  if (set.size() == 0) return {};
  if (set.size() < 4) {
    auto [lo, hi] = std::minmax_element(set.frequencies.begin(), set.frequencies.end());
    return {0.5 * (*lo + *hi), 0.5 * (*hi - *lo)};
  }
  double q1 = quantile(set.frequencies, 0.25);
  double q3 = quantile(set.frequencies, 0.75);
  return {quantile(set.frequencies, 0.5), (q3 - q1) / 1.3489795003921634};
}

}  // namespace

double spectral_extent(const AtomSet& forward, const AtomSet& backward, double beat_offset) {
  double extent = 0.0;
  if (forward.size() > 0) {
    auto s = class_shape(forward);
    extent = std::max(extent, std::abs(s.centre) + 5.0 * s.spread);
  }
  if (backward.size() > 0) {
    auto s = class_shape(backward);
    extent = std::max(extent, std::abs(s.centre + beat_offset) + 5.0 * s.spread);
  }
  return extent;
}

namespace {

// Accumulate sum_i amp_i * exp(-i (2 pi nu_i t_k - phi_i)) for t_k = t0 + k dt into out.
// Phasors rotate by recurrence inside a tile and are reset from exact values
// at every tile start, which bounds the round-off drift.
void accumulate_class(const AtomSet& set, const std::vector<double>& phases, double shift, double t0,
                      double dt, std::size_t n, std::vector<double>& out_re, std::vector<double>& out_im) {
  constexpr std::size_t tile = 4096;
  constexpr std::size_t lanes = 8;
  const std::size_t atoms = set.size();
  for (std::size_t start = 0; start < n; start += tile) {
    const std::size_t len = std::min(tile, n - start);
    const double ts = t0 + static_cast<double>(start) * dt;
    for (std::size_t a0 = 0; a0 < atoms; a0 += lanes) {
      double zr[lanes] = {}, zi[lanes] = {}, wr[lanes] = {}, wi[lanes] = {};
      const std::size_t na = std::min(lanes, atoms - a0);
      for (std::size_t l = 0; l < na; ++l) {
        double nu = set.frequencies[a0 + l] + shift;
        double ph = phases[a0 + l] - two_pi * std::fmod(nu * ts, 1.0);
        zr[l] = set.amplitudes[a0 + l] * std::cos(ph);
        zi[l] = set.amplitudes[a0 + l] * std::sin(ph);
        double step = -two_pi * std::fmod(nu * dt, 1.0);
        wr[l] = std::cos(step);
        wi[l] = std::sin(step);
      }
      double* ore = out_re.data() + start;
      double* oim = out_im.data() + start;
      for (std::size_t k = 0; k < len; ++k) {
        double sr = 0.0, si = 0.0;
#pragma omp simd reduction(+ : sr, si)
        for (std::size_t l = 0; l < lanes; ++l) {
          sr += zr[l];
          si += zi[l];
          double nr = zr[l] * wr[l] - zi[l] * wi[l];
          zi[l] = zr[l] * wi[l] + zi[l] * wr[l];
          zr[l] = nr;
        }
        ore[k] += sr;
        oim[k] += si;
      }
    }
  }
}

std::vector<double> block_phases(const AtomSet& set, std::uint64_t seed, std::uint64_t block, std::uint64_t cls) {
  if (block == 0) return set.phases;
  Rng rng = make_rng(seed, Stream::field_phases, 2 * block + cls);
  std::vector<double> ph(set.size());
  for (double& p : ph) p = two_pi * uniform01(rng);
  return ph;
}

}  // namespace

FieldTrace synthesize_field(const AtomSet& forward, const AtomSet& backward, double beat_offset,
                            double coherent_amplitude, double duration, double dt,
                            double rephase_interval, std::uint64_t seed) {
  if (!(dt > 0.0)) throw DomainError("dt must be positive");
  if (!(duration > 0.0)) throw DomainError("duration must be positive");
  if (!(rephase_interval > 0.0)) throw DomainError("rephase_interval must be positive");
  double extent = spectral_extent(forward, backward, beat_offset);
  if (extent > 0.0 && dt > 1.0 / (8.0 * extent)) {
    throw ConfigError("dt = " + num(dt) + " s undersamples the field; need dt <= " +
                      num(1.0 / (8.0 * extent)) + " s");
  }
  const auto n = static_cast<std::size_t>(std::llround(duration / dt));
  FieldTrace trace;
  trace.dt = dt;
  trace.start_time = 0.0;
  std::vector<double> re(n, coherent_amplitude), im(n, 0.0);

  std::size_t k = 0;
  std::uint64_t block = 0;
  while (k < n) {
    double block_end = static_cast<double>(block + 1) * rephase_interval;
    auto k_end = static_cast<std::size_t>(std::ceil(block_end / dt - 1e-9));
    k_end = std::clamp(k_end, k + 1, n);
    std::vector<double> bre(k_end - k, 0.0), bim(k_end - k, 0.0);
    double t0 = static_cast<double>(k) * dt;
    accumulate_class(forward, block_phases(forward, seed, block, 0), 0.0, t0, dt, k_end - k, bre, bim);
    accumulate_class(backward, block_phases(backward, seed, block, 1), beat_offset, t0, dt, k_end - k, bre, bim);
    for (std::size_t i = 0; i < bre.size(); ++i) {
      re[k + i] += bre[i];
      im[k + i] += bim[i];
    }
    k = k_end;
    ++block;
  }
  trace.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) trace.samples[i] = {re[i], im[i]};
  return trace;
}

G1Curve field_g1(const FieldTrace& trace, double tau_max) {
  const std::size_t n = trace.samples.size();
  if (n < 2 || !(tau_max >= 0.0) || tau_max >= trace.duration() / 10.0) {
    throw StatisticsError("field_g1 needs tau_max < duration / 10");
  }
  const auto lags = static_cast<std::size_t>(std::floor(tau_max / trace.dt + 1e-9));
  std::size_t nfft = 1;
  while (nfft < n + lags + 1) nfft <<= 1;

  std::vector<cplx> buf(nfft, cplx(0.0, 0.0));
  std::copy(trace.samples.begin(), trace.samples.end(), buf.begin());
  auto* data = reinterpret_cast<fftw_complex*>(buf.data());
  fftw_plan fwd = fftw_plan_dft_1d(static_cast<int>(nfft), data, data, FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(fwd);
  fftw_destroy_plan(fwd);
  for (auto& x : buf) x = std::norm(x);
  fftw_plan inv = fftw_plan_dft_1d(static_cast<int>(nfft), data, data, FFTW_BACKWARD, FFTW_ESTIMATE);
  fftw_execute(inv);
  fftw_destroy_plan(inv);

  G1Curve g1;
  const double r0 = buf[0].real() / static_cast<double>(n);
  if (!(r0 > 0.0)) throw StatisticsError("field_g1 of an all-zero trace");
  for (std::size_t k = 0; k <= lags; ++k) {
    cplx r = buf[k] / static_cast<double>(n - k) / r0;
    g1.tau.push_back(static_cast<double>(k) * trace.dt);
    g1.magnitude.push_back(k == 0 ? 1.0 : std::abs(r));
    g1.phase.push_back(k == 0 ? 0.0 : std::arg(r));
  }
  return g1;
}

namespace {

struct BasebandTable {
  std::vector<cplx> values;  // sum |a|^2 exp(-i 2 pi (nu - centre) j h), j >= 0
  double centre = 0.0;
  double step = 0.0;

  cplx at(long j) const {
    if (j < 0) return std::conj(values[static_cast<std::size_t>(-j)]);
    return values[static_cast<std::size_t>(j)];
  }

  cplx interpolate(double tau) const {
    double x = tau / step;
    auto i = static_cast<long>(std::floor(x));
    double t = x - static_cast<double>(i);
    cplx p0 = at(i - 1), p1 = at(i), p2 = at(i + 1), p3 = at(i + 2);
    return p1 + 0.5 * t * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0)));
  }
};

BasebandTable baseband(const AtomSet& set, double shift, double extent) {
  BasebandTable table;
  if (set.size() == 0) return table;
  auto shape = class_shape(set);
  table.centre = shape.centre + shift;
  double spread = std::max(shape.spread, 1.0);
  table.step = std::min(0.25e-9, 0.05 / (two_pi * 6.0 * spread));
  const auto len = static_cast<std::size_t>(std::ceil(extent / table.step)) + 4;
  std::vector<double> re(len, 0.0), im(len, 0.0);
  constexpr std::size_t lanes = 8;
  for (std::size_t a0 = 0; a0 < set.size(); a0 += lanes) {
    double zr[lanes] = {}, zi[lanes] = {}, wr[lanes] = {}, wi[lanes] = {};
    const std::size_t na = std::min(lanes, set.size() - a0);
    for (std::size_t l = 0; l < na; ++l) {
      double p = set.amplitudes[a0 + l] * set.amplitudes[a0 + l];
      double step = -two_pi * std::fmod((set.frequencies[a0 + l] - shape.centre) * table.step, 1.0);
      zr[l] = p;
      wr[l] = std::cos(step);
      wi[l] = std::sin(step);
    }
    for (std::size_t j = 0; j < len; ++j) {
      double sr = 0.0, si = 0.0;
#pragma omp simd reduction(+ : sr, si)
      for (std::size_t l = 0; l < lanes; ++l) {
        sr += zr[l];
        si += zi[l];
        double nr = zr[l] * wr[l] - zi[l] * wi[l];
        zi[l] = zr[l] * wi[l] + zi[l] * wr[l];
        zr[l] = nr;
      }
      re[j] += sr;
      im[j] += si;
    }
  }
  table.values.resize(len);
  for (std::size_t j = 0; j < len; ++j) table.values[j] = {re[j], im[j]};
  return table;
}

}  // namespace

FieldKernel::FieldKernel(const AtomSet& forward, const AtomSet& backward, double beat_offset, double extent) {
  if (!(extent > 0.0) || !std::isfinite(extent)) throw DomainError("kernel extent must be positive and finite");
  extent_ = extent;
  variance_ = forward.power() + backward.power();
  BasebandTable tf = baseband(forward, 0.0, extent);
  BasebandTable tb = baseband(backward, beat_offset, extent);

  double fmax = 0.0;
  for (const auto* set : {&forward, &backward}) {
    if (set->size() == 0) continue;
    auto s = class_shape(*set);
    double c = set == &backward ? s.centre + beat_offset : s.centre;
    fmax = std::max(fmax, std::abs(c) + 6.0 * s.spread);
  }
  step_ = fmax > 0.0 ? std::min(0.05e-9, 0.05 / (two_pi * fmax)) : 0.05e-9;
  inv_step_ = 1.0 / step_;
  const auto len = static_cast<std::size_t>(std::ceil(extent / step_)) + 3;
  // Slot 0 holds C(-step) so lookups never branch on the left edge.
  re_.assign(len + 1, 0.0);
  im_.assign(len + 1, 0.0);
  for (std::size_t j = 0; j < len; ++j) {
    double tau = static_cast<double>(j) * step_;
    cplx c(0.0, 0.0);
    if (!tf.values.empty()) c += std::polar(1.0, -two_pi * tf.centre * tau) * tf.interpolate(tau);
    if (!tb.values.empty()) c += std::polar(1.0, -two_pi * tb.centre * tau) * tb.interpolate(tau);
    re_[j + 1] = c.real();
    im_[j + 1] = c.imag();
  }
  re_[0] = re_[2];
  im_[0] = -im_[2];
}

cplx FieldKernel::operator()(double tau) const {
  bool negative = tau < 0.0;
  double a = negative ? -tau : tau;
  if (a > extent_) return {0.0, 0.0};
  double x = a * inv_step_;
  auto i = static_cast<std::size_t>(x);
  double t = x - static_cast<double>(i);
  // slots i..i+3 hold C at (i-1..i+2) * step
  const double* r = re_.data() + i;
  const double* m = im_.data() + i;
  auto cr = [t](const double* p) {
    return p[1] + 0.5 * t * (p[2] - p[0] + t * (2.0 * p[0] - 5.0 * p[1] + 4.0 * p[2] - p[3] +
                                                   t * (3.0 * (p[1] - p[2]) + p[3] - p[0])));
  };
  double vr = cr(r), vi = cr(m);
  return {vr, negative ? -vi : vi};
}

}  // namespace thermobeat::synth
