#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "thermobeat/curves.hpp"
#include "thermobeat/physics.hpp"

namespace thermobeat::estimate {

enum class WindowMode {
  adaptive,  // Hann half-width set from where the excess correlation leaves the noise
  full,      // Hann over the whole lag range
  fixed,     // Hann over +-fixed_half_width
};

enum class Refine {
  none,  // windowed transform peak only
  fit,   // least-squares fit of the lag-domain beat through the detector response
};

struct BeatOptions {
  WindowMode window = WindowMode::adaptive;
  double fixed_half_width = 100e-9;   // s, for WindowMode::fixed
  double theta = 2.0 * 3.14159265358979323846 / 180.0;  // rad, for detuning_abs
  double min_snr = 5.0;               // peak over noise floor
  Refine refine = Refine::fit;
  // Detector response assumed by the fit: per-detector Gaussian jitter, and
  // whether g2 values are bin averages (histograms) or point samples.
  double jitter_sigma = 0.0;          // s
  bool binned = true;
};

struct BeatEstimate {
  double f_mod = 0.0;                // Hz
  double sigma_f = 0.0;              // Hz
  double detuning_abs = 0.0;         // Hz
  double spectral_resolution = 0.0;  // Hz, 1 / (2 tau_max)
  double peak_magnitude = 0.0;       // window-normalized cosine amplitude at f_mod
  double noise_floor = 0.0;          // same units as peak_magnitude
  double window_half_width = 0.0;    // s
  double peak_width = 0.0;           // Hz, Gaussian-equivalent width from curvature
  std::string method;
};

/// Beat frequency of the oscillating part of g2 - 1 by windowed cosine
/// transform, log-parabolic peak interpolation and Newton refinement, then
/// optionally a lag-domain fit of zero-frequency lobes plus one
/// Gaussian-enveloped cosine, blurred by jitter and averaged over bins.
/// Throws EstimationError without a peak of min_snr times the noise floor.
BeatEstimate estimate_beat(const G2Curve& g2, const BeatOptions& options = {});

/// Windowed cosine transform of g2 - 1 at frequency nu (diagnostics, tests).
double cosine_transform(const G2Curve& g2, double half_width, double nu);

struct FitOptions {
  // Parameters: rho, sigma_forward, sigma_backward, f_mod, amplitude.
  std::array<bool, 5> fixed{false, false, false, false, false};
  physics::LineShape backward_shape = physics::LineShape::gaussian;
  int max_iterations = 200;
  double tolerance = 1e-10;
  double tau_limit = 0.0;  // fit only |tau| <= tau_limit when positive
  bool bin_average = true;
};

struct InterferenceFit {
  static constexpr int n_params = 5;
  double rho = 0.0;             // n_B / n_F
  double sigma_forward = 0.0;   // Hz
  double sigma_backward = 0.0;  // Hz
  double f_mod = 0.0;           // Hz
  double amplitude = 1.0;       // g2(0) - 1 = 1 / (1 + r)^2
  double visibility = 0.0;
  double r = 0.0;               // may come out slightly negative for g2(0) > 2
  double g2_zero = 0.0;
  double rate_forward = 0.0;    // split of the initial total rate by rho
  double rate_backward = 0.0;
  std::array<std::array<double, 5>, 5> covariance{};
  double chi2 = 0.0;
  std::size_t dof = 0;
  int iterations = 0;

  double stderr_of(int i) const;
  double g2_zero_stderr() const { return stderr_of(4); }
  double visibility_stderr() const;
};

/// Weighted least squares of the extended Siegert model (bin-averaged by
/// default) to g2. Starts from `initial` and the beat estimate; with a zero
/// backward rate only the forward width and the amplitude are free.
InterferenceFit fit_interference(const G2Curve& g2, const physics::ExperimentParams& initial,
                                 const FitOptions& options = {});

/// Model used by the fit, evaluated at lag tau.
double interference_model(double tau, double rho, double sigma_forward, double sigma_backward, double f_mod,
                          double amplitude, physics::LineShape backward_shape, double lorentzian_hwhm);

struct SweepPoint {
  double detuning = 0.0;  // Hz, as set
  BeatEstimate estimate;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  double alpha = 0.0;
  double alpha_stderr = 0.0;          // scaled by the fit residuals
  double alpha_stderr_weights = 0.0;  // from sigma_f alone
  double chi2 = 0.0;
  std::size_t dof = 0;
  std::vector<double> residuals;      // (f - alpha |detuning|) / sigma_f
  double reduced_chi2() const { return dof ? chi2 / static_cast<double>(dof) : 0.0; }
};

/// f_mod = alpha |detuning| through the origin, weights 1 / sigma_f^2.
SweepResult fit_slope(const std::vector<SweepPoint>& sweep);

struct StabilityRow {
  double duration = 0.0;
  double mean_f = 0.0;
  double std_f = 0.0;
  double mean_sigma_f = 0.0;
  std::vector<double> f_values;
};

struct StabilityResult {
  std::vector<StabilityRow> rows;
  double slope = 0.0;  // d log std / d log T
  double slope_stderr = 0.0;
  double intercept = 0.0;
};

/// Produces the g2 for one (duration, seed) run.
using Simulator = std::function<G2Curve(double duration, std::uint64_t seed)>;

/// Sample std of f_mod over seeds for each duration and the log-log slope.
/// Estimation failures are rethrown with their duration.
StabilityResult stability_scan(const Simulator& simulate, const std::vector<double>& durations,
                               std::size_t seeds_per_point, std::uint64_t first_seed = 1,
                               const BeatOptions& options = {});

/// OLS slope of log(std) on log(T).
void fit_loglog(StabilityResult& result);

}  // namespace thermobeat::estimate
