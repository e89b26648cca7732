#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "thermobeat/curves.hpp"

// Closed-form spectral widths, beat frequency and the analytic g2 of two
// superposed chaotic sources. All spectral quantities are ordinary
// frequencies in Hz; angular frequency never appears in the interface.
namespace thermobeat::physics {

struct Transition {
  double rest_frequency = 0.0;     // Hz
  double natural_linewidth = 0.0;  // Hz, decay rate expressed as Gamma / 2pi
  double wavelength = 0.0;         // m
  double atomic_mass = 0.0;        // kg

  /// Throws DomainError on non-positive fields or when wavelength and
  /// rest_frequency disagree by more than 1 ppm.
  void validate() const;
};

/// 87Rb 5S1/2 F=2 -> 5P3/2 F'=3.
Transition rubidium87_d2();

struct ExperimentParams {
  Transition transition = rubidium87_d2();
  double detuning = 100e6;                        // Hz, signed
  double observation_angle = 2.0 * 3.14159265358979323846 / 180.0;  // rad
  double temperature = 333.15;                    // K
  double rate_forward = 3.2e5;                    // counts/s
  double rate_backward = 3.2e5;                   // counts/s
  double coherent_ratio = 0.0;                    // r
  double beam_waist_excitation = 1.1e-3;          // m, descriptive only
  double waist_observation = 95e-6;               // m, descriptive only

  void validate() const;
  /// Human-readable warnings for physically questionable but legal input
  /// (detuning outside the observability window).
  std::vector<std::string> warnings() const;
  double total_rate() const { return rate_forward + rate_backward; }
};

enum class LineShape { gaussian, voigt };

struct SpectralModel {
  double center_offset = 0.0;    // Hz relative to the laser
  double gaussian_sigma = 0.0;   // Hz
  double lorentzian_hwhm = 0.0;  // Hz, zero for gaussian
  LineShape shape = LineShape::gaussian;

  void validate() const;
  /// Baseband envelope of g1 (real, even, g1(0) = 1).
  double envelope(double tau) const;
  /// Full normalized first-order coherence <E*(t) E(t+tau)> / <|E|^2>,
  /// carrier included.
  std::complex<double> g1(double tau) const;
  /// Integral of |g1|^2 over all tau.
  double coherence_time() const;
  /// Smallest tau beyond which the envelope stays below `tolerance`.
  double envelope_extent(double tolerance) const;
};

double doppler_sigma(double temperature, double mass, double wavelength);
double sigma_forward(double sigma_doppler, double theta);
double sigma_backward(double sigma_doppler, double theta, double gamma);
double beat_frequency(double detuning, double theta);

/// Forward channel at the laser frequency and backward channel offset by
/// the signed beat 2 * detuning * cos(theta). The quadrature sigma_B is
/// used for gaussian; voigt keeps the residual Doppler width as the
/// gaussian part and uses the natural linewidth as Lorentzian HWHM.
std::pair<SpectralModel, SpectralModel> channel_models(const ExperimentParams& params,
                                                       LineShape backward_shape = LineShape::gaussian);

struct ChannelMix {
  SpectralModel forward;
  SpectralModel backward;
  double rate_forward = 0.0;
  double rate_backward = 0.0;
  double coherent_ratio = 0.0;
};

ChannelMix make_mix(const ExperimentParams& params, LineShape backward_shape = LineShape::gaussian);

/// Extended Siegert relation, diluted by the coherent admixture.
double g2_value(const ChannelMix& mix, double tau);
/// Average of g2_value over [tau - w/2, tau + w/2].
double g2_bin_average(const ChannelMix& mix, double tau, double bin_width);

G2Curve predict_g2(const ExperimentParams& params, std::span<const double> tau_grid);
G2Curve predict_g2(const ChannelMix& mix, std::span<const double> tau_grid);
/// Model curve on bins of finite width, as an ideal histogram would see it.
G2Curve predict_g2_binned(const ChannelMix& mix, std::span<const double> tau_centres, double bin_width);

double g20_from_r(double r);
double r_from_g20(double g2_zero);
double visibility_from_ratio(double rho);

}  // namespace thermobeat::physics
