#include "thermobeat/physics.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "thermobeat/errors.hpp"
#include "thermobeat/quadrature.hpp"
#include "thermobeat/units.hpp"

namespace thermobeat::physics {

using constants::pi;
using constants::two_pi;

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError(std::string(what) + " must be positive and finite");
  }
}

void require_non_negative(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw DomainError(std::string(what) + " must be non-negative and finite");
  }
}

}  // namespace

void Transition::validate() const {
  require_positive(rest_frequency, "transition.rest_frequency");
  require_positive(natural_linewidth, "transition.natural_linewidth");
  require_positive(wavelength, "transition.wavelength");
  require_positive(atomic_mass, "transition.atomic_mass");
  double implied = constants::speed_of_light / wavelength;
  if (std::abs(implied - rest_frequency) > 1e-6 * rest_frequency) {
    throw DomainError("transition.wavelength inconsistent with rest_frequency");
  }
}

Transition rubidium87_d2() {
  Transition t;
  t.rest_frequency = 384.2304844685e12;
  t.natural_linewidth = 6.0666e6;
  t.wavelength = 780.241209686e-9;
  t.atomic_mass = 86.909180527 * constants::atomic_mass_unit;
  return t;
}

void ExperimentParams::validate() const {
  transition.validate();
  if (!std::isfinite(detuning)) throw DomainError("experiment.detuning must be finite");
  if (!(observation_angle >= 0.0 && observation_angle < pi / 2)) {
    throw DomainError("experiment.observation_angle must lie in [0, pi/2)");
  }
  require_positive(temperature, "experiment.temperature");
  require_non_negative(rate_forward, "experiment.rate_forward");
  require_non_negative(rate_backward, "experiment.rate_backward");
  if (rate_forward + rate_backward <= 0.0) {
    throw DomainError("experiment rates are both zero");
  }
  require_non_negative(coherent_ratio, "experiment.coherent_ratio");
  require_non_negative(beam_waist_excitation, "experiment.beam_waist_excitation");
  require_non_negative(waist_observation, "experiment.waist_observation");
}

std::vector<std::string> ExperimentParams::warnings() const {
  std::vector<std::string> out;
  double sd = doppler_sigma(temperature, transition.atomic_mass, transition.wavelength);
  double sb = sigma_backward(sd, observation_angle, transition.natural_linewidth);
  std::ostringstream os;
  if (std::abs(detuning) >= 5.0 * sd) {
    os << "detuning " << detuning << " Hz exceeds 5 Doppler widths (" << 5.0 * sd << " Hz)";
    out.push_back(os.str());
  } else if (std::abs(detuning) <= sb) {
    os << "detuning " << detuning << " Hz is below the backward width " << sb
       << " Hz; the beat may not be resolvable";
    out.push_back(os.str());
  }
  return out;
}

void SpectralModel::validate() const {
  if (!std::isfinite(center_offset)) throw DomainError("spectral center_offset must be finite");
  require_non_negative(gaussian_sigma, "spectral gaussian_sigma");
  require_non_negative(lorentzian_hwhm, "spectral lorentzian_hwhm");
  if (shape == LineShape::gaussian && lorentzian_hwhm != 0.0) {
    throw DomainError("gaussian line shape requires lorentzian_hwhm = 0");
  }
}

double SpectralModel::envelope(double tau) const {
  double e = std::exp(-2.0 * pi * pi * gaussian_sigma * gaussian_sigma * tau * tau);
  if (shape == LineShape::voigt) e *= std::exp(-two_pi * lorentzian_hwhm * std::abs(tau));
  return e;
}

std::complex<double> SpectralModel::g1(double tau) const {
  return envelope(tau) * std::polar(1.0, -two_pi * center_offset * tau);
}

double SpectralModel::coherence_time() const {
  double gamma = shape == LineShape::voigt ? lorentzian_hwhm : 0.0;
  if (gaussian_sigma == 0.0 && gamma == 0.0) return std::numeric_limits<double>::infinity();
  if (gamma == 0.0) return std::sqrt(pi) / (two_pi * gaussian_sigma);
  if (gaussian_sigma == 0.0) return 1.0 / (two_pi * gamma);
  // Voigt: integrate envelope^2 over [0, extent] on a fine Gauss-Legendre mesh.
  double extent = envelope_extent(1e-12);
  return 2.0 * integrate([this](double t) { double e = envelope(t); return e * e; }, 0.0, extent, 256);
}

double SpectralModel::envelope_extent(double tolerance) const {
  if (!(tolerance > 0.0 && tolerance < 1.0)) throw DomainError("envelope tolerance must lie in (0, 1)");
  double gamma = shape == LineShape::voigt ? lorentzian_hwhm : 0.0;
  if (gaussian_sigma == 0.0 && gamma == 0.0) return std::numeric_limits<double>::infinity();
  double lt = -std::log(tolerance);
  if (gamma == 0.0) return std::sqrt(lt / (2.0 * pi * pi)) / gaussian_sigma;
  // a t^2 + b t = lt
  double a = 2.0 * pi * pi * gaussian_sigma * gaussian_sigma;
  double b = two_pi * gamma;
  if (a == 0.0) return lt / b;
  return (-b + std::sqrt(b * b + 4.0 * a * lt)) / (2.0 * a);
}

double doppler_sigma(double temperature, double mass, double wavelength) {
  require_positive(temperature, "temperature");
  require_positive(mass, "mass");
  require_positive(wavelength, "wavelength");
  return std::sqrt(constants::boltzmann * temperature / mass) / wavelength;
}

double sigma_forward(double sigma_doppler, double theta) {
  require_non_negative(sigma_doppler, "sigma_doppler");
  if (!(theta >= 0.0 && theta <= pi / 2)) throw DomainError("theta must lie in [0, pi/2]");
  return sigma_doppler * std::sin(theta);
}

double sigma_backward(double sigma_doppler, double theta, double gamma) {
  require_non_negative(gamma, "gamma");
  double sf = sigma_forward(sigma_doppler, theta);
  return std::hypot(sf, 2.0 * gamma);
}

double beat_frequency(double detuning, double theta) {
  return std::abs(2.0 * detuning * std::cos(theta));
}

std::pair<SpectralModel, SpectralModel> channel_models(const ExperimentParams& params,
                                                       LineShape backward_shape) {
  const auto& tr = params.transition;
  double sd = doppler_sigma(params.temperature, tr.atomic_mass, tr.wavelength);
  SpectralModel f;
  f.center_offset = 0.0;
  f.gaussian_sigma = sigma_forward(sd, params.observation_angle);
  SpectralModel b;
  b.center_offset = 2.0 * params.detuning * std::cos(params.observation_angle);
  b.shape = backward_shape;
  if (backward_shape == LineShape::gaussian) {
    b.gaussian_sigma = sigma_backward(sd, params.observation_angle, tr.natural_linewidth);
  } else {
    b.gaussian_sigma = f.gaussian_sigma;
    b.lorentzian_hwhm = tr.natural_linewidth;
  }
  return {f, b};
}

ChannelMix make_mix(const ExperimentParams& params, LineShape backward_shape) {
  params.validate();
  auto [f, b] = channel_models(params, backward_shape);
  return {f, b, params.rate_forward, params.rate_backward, params.coherent_ratio};
}

double g2_value(const ChannelMix& mix, double tau) {
  double total = mix.rate_forward + mix.rate_backward;
  if (!(total > 0.0)) throw DomainError("channel rates are both zero");
  std::complex<double> field = mix.rate_forward * mix.forward.g1(tau) + mix.rate_backward * mix.backward.g1(tau);
  double excess = std::norm(field) / (total * total);
  double dilution = 1.0 + mix.coherent_ratio;
  return 1.0 + excess / (dilution * dilution);
}

double g2_bin_average(const ChannelMix& mix, double tau, double bin_width) {
  if (bin_width <= 0.0) return g2_value(mix, tau);
  return integrate([&mix](double t) { return g2_value(mix, t); }, tau - 0.5 * bin_width,
                   tau + 0.5 * bin_width, 2) /
         bin_width;
}

namespace {

void check_grid(std::span<const double> grid) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) throw DataError("tau grid contains non-finite values");
    if (i > 0 && grid[i] < grid[i - 1]) throw DataError("tau grid is not sorted");
  }
}

G2Curve model_curve(std::span<const double> grid) {
  G2Curve c;
  c.tau.assign(grid.begin(), grid.end());
  c.values.resize(grid.size());
  c.sigma.assign(grid.size(), 0.0);
  if (grid.size() >= 2) c.bin_width = grid[1] - grid[0];
  return c;
}

}  // namespace

G2Curve predict_g2(const ChannelMix& mix, std::span<const double> tau_grid) {
  check_grid(tau_grid);
  G2Curve c = model_curve(tau_grid);
  for (std::size_t i = 0; i < tau_grid.size(); ++i) c.values[i] = g2_value(mix, tau_grid[i]);
  return c;
}

G2Curve predict_g2(const ExperimentParams& params, std::span<const double> tau_grid) {
  return predict_g2(make_mix(params), tau_grid);
}

G2Curve predict_g2_binned(const ChannelMix& mix, std::span<const double> tau_centres, double bin_width) {
  check_grid(tau_centres);
  G2Curve c = model_curve(tau_centres);
  c.bin_width = bin_width;
  for (std::size_t i = 0; i < tau_centres.size(); ++i) {
    c.values[i] = g2_bin_average(mix, tau_centres[i], bin_width);
  }
  return c;
}

double g20_from_r(double r) {
  if (!(r >= 0.0)) throw DomainError("coherent ratio must be non-negative");
  if (std::isinf(r)) return 1.0;
  double d = 1.0 + r;
  return 1.0 + 1.0 / (d * d);
}

double r_from_g20(double g2_zero) {
  if (!(g2_zero > 1.0 && g2_zero <= 2.0)) throw DomainError("g2(0) must lie in (1, 2]");
  return std::max(0.0, 1.0 / std::sqrt(g2_zero - 1.0) - 1.0);
}

double visibility_from_ratio(double rho) {
  if (!(rho >= 0.0)) throw DomainError("rate ratio must be non-negative");
  if (std::isinf(rho)) return 0.0;
  return 2.0 * rho / (1.0 + rho * rho);
}

}  // namespace thermobeat::physics
