#include "thermobeat/estimate.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lm.hpp"
#include "thermobeat/errors.hpp"
#include "thermobeat/quadrature.hpp"
#include "thermobeat/units.hpp"

namespace thermobeat::estimate {

using constants::pi;
using constants::two_pi;

namespace {

// Excess correlation with usable standard errors on a checked uniform grid.
struct Prepared {
  std::vector<double> tau, x, s;
  double bin = 0.0;
  double tau_max = 0.0;
  std::size_t centre = 0;
};

Prepared prepare(const G2Curve& g2) {
  const std::size_t n = g2.size();
  if (n < 8 || g2.values.size() != n) throw DataError("g2 curve too short for estimation");
  Prepared p;
  p.tau = g2.tau;
  p.bin = (g2.tau.back() - g2.tau.front()) / static_cast<double>(n - 1);
  if (!(p.bin > 0.0)) throw DataError("g2 tau grid must increase");
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs(g2.tau[i] - g2.tau[i - 1] - p.bin) > 1e-6 * p.bin) throw DataError("g2 bins are not uniform");
  }
  p.centre = static_cast<std::size_t>(std::min_element(g2.tau.begin(), g2.tau.end(),
                                                       [](double a, double b) { return std::abs(a) < std::abs(b); }) -
                                      g2.tau.begin());
  if (std::abs(g2.tau[p.centre]) > 1e-6 * p.bin) throw DataError("g2 grid must contain tau = 0");
  p.tau_max = std::max(std::abs(g2.tau.front()), std::abs(g2.tau.back()));
  p.x.resize(n);
  double xmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    p.x[i] = g2.values[i] - 1.0;
    xmax = std::max(xmax, std::abs(p.x[i]));
  }
  double smin = INFINITY;
  for (double s : g2.sigma) {
    if (s > 0.0 && s < smin) smin = s;
  }
  if (!std::isfinite(smin)) {
    if (!(xmax > 0.0)) throw EstimationError("g2 - 1 is identically zero: no beat");
    smin = 1e-6 * xmax;
  }
  p.s.resize(n);
  for (std::size_t i = 0; i < n; ++i) p.s[i] = i < g2.sigma.size() ? std::max(g2.sigma[i], smin) : smin;
  return p;
}

double adaptive_half_width(const Prepared& p) {
  constexpr std::size_t m = 16;
  const std::size_t lags = std::min(p.centre, p.x.size() - 1 - p.centre);
  if (lags < m) return p.tau_max + p.bin;
  std::vector<double> u(lags + 1);
  for (std::size_t k = 0; k <= lags; ++k) {
    double zp = p.x[p.centre + k] / p.s[p.centre + k];
    double zm = p.x[p.centre - k] / p.s[p.centre - k];
    u[k] = 0.5 * (zp * zp + zm * zm);
  }
  const double threshold = 1.0 + 4.0 / std::sqrt(static_cast<double>(m));
  // walk outwards until a window of m lags looks like pure noise
  double sum = std::accumulate(u.begin(), u.begin() + m, 0.0);
  std::size_t last = 0;
  bool found = false;
  for (std::size_t k = 0; k + m <= lags + 1; ++k) {
    if (k > 0) sum += u[k + m - 1] - u[k - 1];
    if (sum / m <= threshold) {
      last = k + m / 2;
      found = true;
      break;
    }
  }
  if (!found) return p.tau_max + p.bin;
  double extent = static_cast<double>(last) * p.bin;
  return std::clamp(1.5 * extent, 16.0 * p.bin, p.tau_max + p.bin);
}

struct Transform {
  std::vector<double> w;  // Hann weights per bin
  double wsum = 0.0;
};

Transform hann(const Prepared& p, double half_width) {
  Transform t;
  t.w.resize(p.tau.size(), 0.0);
  for (std::size_t i = 0; i < p.tau.size(); ++i) {
    double a = std::abs(p.tau[i]);
    if (a < half_width) {
      double c = std::cos(0.5 * pi * a / half_width);
      t.w[i] = c * c;
    }
  }
  t.wsum = std::accumulate(t.w.begin(), t.w.end(), 0.0);
  return t;
}

// C(nu) and its first two derivatives.
std::array<double, 3> dtft(const Prepared& p, const Transform& t, double nu) {
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
  for (std::size_t i = 0; i < p.tau.size(); ++i) {
    if (t.w[i] == 0.0) continue;
    double ph = two_pi * nu * p.tau[i];
    double a = t.w[i] * p.x[i];
    double om = two_pi * p.tau[i];
    double cs = std::cos(ph), sn = std::sin(ph);
    c0 += a * cs;
    c1 -= a * om * sn;
    c2 -= a * om * om * cs;
  }
  return {c0 / t.wsum, c1 / t.wsum, c2 / t.wsum};
}

// Cosine transform on the grid m / (N bin) by real FFT, zero lag at index 0.
std::vector<double> coarse_spectrum(const Prepared& p, const Transform& t, double half_width, std::size_t& nfft) {
  const auto span = static_cast<std::size_t>(std::ceil(half_width / p.bin));
  nfft = 64;
  while (nfft < 8 * span) nfft <<= 1;
  std::vector<double> in(nfft, 0.0);
  for (std::size_t i = 0; i < p.tau.size(); ++i) {
    if (t.w[i] == 0.0) continue;
    long k = std::lround(p.tau[i] / p.bin);
    auto idx = static_cast<std::size_t>((k % static_cast<long>(nfft) + static_cast<long>(nfft)) % static_cast<long>(nfft));
    in[idx] += t.w[i] * p.x[i];
  }
  std::vector<std::complex<double>> out(nfft / 2 + 1);
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(nfft), in.data(),
                                        reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  std::vector<double> c(out.size());
  for (std::size_t m = 0; m < out.size(); ++m) c[m] = out[m].real() / t.wsum;
  return c;
}

std::size_t most_prominent_peak(const std::vector<double>& c) {
  std::size_t best = 0;
  double best_prom = -INFINITY;
  for (std::size_t m = 1; m + 1 < c.size(); ++m) {
    if (!(c[m] > c[m - 1] && c[m] >= c[m + 1]) || !(c[m] > 0.0)) continue;
    double left = c[m];
    std::size_t i = m;
    while (i > 0 && c[i - 1] <= c[m]) left = std::min(left, c[--i]);
    double right = c[m];
    std::size_t j = m;
    while (j + 1 < c.size() && c[j + 1] <= c[m]) right = std::min(right, c[++j]);
    double prom = c[m] - std::max(left, right);
    if (prom > best_prom) {
      best_prom = prom;
      best = m;
    }
  }
  return best;
}

// Two Gaussian lobes at zero frequency plus one Gaussian-enveloped cosine,
// convolved with the two-detector jitter (variance v) in closed form.
double beat_model_point(const Eigen::VectorXd& q, double tau, double v) {
  double t2 = tau * tau;
  double out = 0.0;
  for (int k = 0; k < 2; ++k) {
    double l2 = std::exp(2.0 * q[2 * k + 1]) + v;
    out += q[2 * k] * std::sqrt((l2 - v) / l2) * std::exp(-0.5 * t2 / l2);
  }
  double l2 = std::exp(2.0 * q[5]);
  double s2 = l2 + v;
  double om = two_pi * q[6];
  out += q[4] * std::sqrt(l2 / s2) * std::exp(-0.5 * t2 / s2 - 0.5 * om * om * l2 * v / s2) *
         std::cos(om * tau * l2 / s2);
  return out;
}

double beat_model(const Eigen::VectorXd& q, double tau, double v, double bin) {
  if (bin <= 0.0) return beat_model_point(q, tau, v);
  double acc = 0.0;
  for (std::size_t i = 0; i < 8; ++i) acc += gl8_weights[i] * beat_model_point(q, tau + 0.5 * bin * gl8_nodes[i], v);
  return 0.5 * acc;
}

bool beat_fit(const Prepared& p, double half_width, double f0, double width, double peak, const Transform& t,
              const BeatOptions& opt, double& f_out, double& sigma_out) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < p.tau.size(); ++i) {
    if (std::abs(p.tau[i]) < half_width) idx.push_back(i);
  }
  if (idx.size() < 16) return false;
  const double v = 2.0 * opt.jitter_sigma * opt.jitter_sigma;
  const double bin = opt.binned ? p.bin : 0.0;
  const double ell = 1.0 / (two_pi * width);
  double envsum = 0.0;
  for (std::size_t i : idx) envsum += t.w[i] * std::exp(-0.5 * p.tau[i] * p.tau[i] / (ell * ell));
  const double amp = 2.0 * peak * t.wsum / std::max(envsum, 1e-300);
  const double rest = std::max(p.x[p.centre] - amp, 0.05 * std::abs(amp));
  Eigen::VectorXd q(7);
  q << 0.5 * rest, std::log(1.3 * ell), 0.5 * rest, std::log(0.8 * ell), amp, std::log(ell), f0;
  Eigen::VectorXd scale(7);
  double a_scale = std::max(std::abs(amp), 1e-12) * 1e-6;
  scale << a_scale, 1e-6, a_scale, 1e-6, a_scale, 1e-6, std::max(1e-6 * f0, 1.0);
  auto fn = [&](const Eigen::VectorXd& u, Eigen::VectorXd& r) {
    r.resize(static_cast<long>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      std::size_t i = idx[k];
      r[static_cast<long>(k)] = (p.x[i] - beat_model(u, p.tau[i], v, bin)) / p.s[i];
    }
  };
  auto res = detail::levenberg_marquardt(fn, q, std::vector<bool>(7, false), scale, 200, 1e-12);
  if (!res.converged || !res.params.allFinite()) return false;
  double f = res.params[6];
  if (std::abs(f - f0) > 3.0 * width || !(f > 0.0)) return false;
  f_out = f;
  sigma_out = std::sqrt(std::max(res.covariance(6, 6), 0.0));
  return sigma_out > 0.0;
}

}  // namespace

double cosine_transform(const G2Curve& g2, double half_width, double nu) {
  Prepared p = prepare(g2);
  Transform t = hann(p, half_width);
  if (!(t.wsum > 0.0)) throw DomainError("window holds no bins");
  return dtft(p, t, nu)[0];
}

BeatEstimate estimate_beat(const G2Curve& g2, const BeatOptions& opt) {
  Prepared p = prepare(g2);
  double half_width = 0.0;
  switch (opt.window) {
    case WindowMode::adaptive: half_width = adaptive_half_width(p); break;
    case WindowMode::full: half_width = p.tau_max + p.bin; break;
    case WindowMode::fixed:
      if (!(opt.fixed_half_width > 2.0 * p.bin)) throw DomainError("fixed window narrower than two bins");
      half_width = std::min(opt.fixed_half_width, p.tau_max + p.bin);
      break;
  }
  Transform t = hann(p, half_width);

  std::size_t nfft = 0;
  std::vector<double> c = coarse_spectrum(p, t, half_width, nfft);
  const double dnu = 1.0 / (static_cast<double>(nfft) * p.bin);
  std::size_t m = most_prominent_peak(c);
  if (m == 0) throw EstimationError("no spectral peak away from zero frequency");

  double nu = static_cast<double>(m) * dnu;
  double a = c[m - 1], b = c[m], d = c[m + 1];
  double delta = 0.0;
  if (a > 0.0 && b > 0.0 && d > 0.0) {
    double la = std::log(a), lb = std::log(b), ld = std::log(d);
    double den = la - 2.0 * lb + ld;
    if (den < 0.0) delta = 0.5 * (la - ld) / den;
  } else {
    double den = a - 2.0 * b + d;
    if (den < 0.0) delta = 0.5 * (a - d) / den;
  }
  nu += std::clamp(delta, -0.5, 0.5) * dnu;

  std::array<double, 3> cd = dtft(p, t, nu);
  for (int it = 0; it < 30 && cd[2] < 0.0; ++it) {
    double step = std::clamp(-cd[1] / cd[2], -dnu, dnu);
    nu += step;
    cd = dtft(p, t, nu);
    if (std::abs(step) < 1e-12 * nu) break;
  }

  double var0 = 0.0, var1 = 0.0;
  for (std::size_t i = 0; i < p.tau.size(); ++i) {
    if (t.w[i] == 0.0) continue;
    double ph = two_pi * nu * p.tau[i];
    double ws = t.w[i] * p.s[i];
    var0 += ws * ws * std::cos(ph) * std::cos(ph);
    double wd = ws * two_pi * p.tau[i] * std::sin(ph);
    var1 += wd * wd;
  }
  const double floor = std::sqrt(var0) / t.wsum;
  if (!(cd[0] >= opt.min_snr * floor) || !(cd[2] < 0.0)) {
    throw EstimationError("beat peak " + num(cd[0]) + " below " + num(opt.min_snr) +
                          " x noise floor " + num(floor));
  }

  BeatEstimate e;
  e.f_mod = nu;
  e.sigma_f = std::sqrt(var1) / t.wsum / std::abs(cd[2]);
  e.peak_magnitude = cd[0];
  e.noise_floor = floor;
  e.window_half_width = half_width;
  e.peak_width = std::sqrt(cd[0] / -cd[2]);
  e.method = opt.window == WindowMode::adaptive ? "hann-adaptive" : opt.window == WindowMode::full ? "hann-full" : "hann-fixed";

  if (opt.refine == Refine::fit) {
    double f = 0.0, sf = 0.0;
    if (beat_fit(p, half_width, e.f_mod, e.peak_width, e.peak_magnitude, t, opt, f, sf)) {
      e.f_mod = f;
      e.sigma_f = sf;
      e.method += "+fit";
    }
  }

  if (p.bin >= 0.25 / e.f_mod) {
    std::ostringstream os;
    os << "bin width " << p.bin << " s too coarse for a beat at " << e.f_mod << " Hz (need < 1/(4 f))";
    throw EstimationError(os.str());
  }
  if (2.0 * p.tau_max * e.f_mod < 5.0) throw EstimationError("lag range covers fewer than 5 beat periods");
  e.detuning_abs = e.f_mod / (2.0 * std::cos(opt.theta));
  e.spectral_resolution = 1.0 / (2.0 * p.tau_max);
  return e;
}

double interference_model(double tau, double rho, double sigma_forward, double sigma_backward, double f_mod,
                          double amplitude, physics::LineShape backward_shape, double lorentzian_hwhm) {
  double gf = std::exp(-2.0 * pi * pi * sigma_forward * sigma_forward * tau * tau);
  double gb = std::exp(-2.0 * pi * pi * sigma_backward * sigma_backward * tau * tau);
  if (backward_shape == physics::LineShape::voigt) gb *= std::exp(-two_pi * lorentzian_hwhm * std::abs(tau));
  double excess = gf * gf + rho * rho * gb * gb + 2.0 * rho * gf * gb * std::cos(two_pi * f_mod * tau);
  return 1.0 + amplitude * excess / ((1.0 + rho) * (1.0 + rho));
}

double InterferenceFit::stderr_of(int i) const {
  return std::sqrt(std::max(covariance[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)], 0.0));
}

double InterferenceFit::visibility_stderr() const {
  double d = 2.0 * (1.0 - rho * rho) / ((1.0 + rho * rho) * (1.0 + rho * rho));
  return std::abs(d) * stderr_of(0);
}

InterferenceFit fit_interference(const G2Curve& g2, const physics::ExperimentParams& initial, const FitOptions& opt) {
  initial.validate();
  if (!(initial.rate_forward > 0.0)) throw DomainError("interference fit needs a positive forward rate");
  Prepared p = prepare(g2);
  const bool single = initial.rate_backward == 0.0;
  auto [mf, mb] = physics::channel_models(initial, opt.backward_shape);
  const double gamma_l = mb.lorentzian_hwhm;

  double f0 = physics::beat_frequency(initial.detuning, initial.observation_angle);
  if (!single) {
    try {
      BeatOptions bo;
      bo.theta = initial.observation_angle;
      f0 = estimate_beat(g2, bo).f_mod;
    } catch (const EstimationError&) {
      // keep the nominal beat as the starting point
    }
  }
  const double rho0 = initial.rate_backward / initial.rate_forward;
  const double beta0 = 1.0 / ((1.0 + initial.coherent_ratio) * (1.0 + initial.coherent_ratio));

  // Internal parameters: log rho, log sigma_f, log sigma_b, f, beta.
  Eigen::VectorXd q(5);
  q << (single ? 0.0 : std::log(rho0)), std::log(std::max(mf.gaussian_sigma, 1.0)),
      std::log(std::max(mb.gaussian_sigma, 1.0)), f0, beta0;
  std::vector<bool> fixed(opt.fixed.begin(), opt.fixed.end());
  if (single) fixed[0] = fixed[2] = fixed[3] = true;
  Eigen::VectorXd scale(5);
  scale << 1e-6, 1e-6, 1e-6, std::max(1e-6 * f0, 1.0), 1e-6;

  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < p.tau.size(); ++i) {
    if (opt.tau_limit <= 0.0 || std::abs(p.tau[i]) <= opt.tau_limit + 1e-15) idx.push_back(i);
  }
  if (idx.size() <= 5) throw FitError("too few bins for the interference fit");
  const double half = 0.5 * p.bin;
  auto model = [&](const Eigen::VectorXd& v, double tau) {
    double rho = single ? 0.0 : std::exp(v[0]);
    double sf = std::exp(v[1]), sb = std::exp(v[2]);
    auto at = [&](double t) { return interference_model(t, rho, sf, sb, v[3], v[4], opt.backward_shape, gamma_l); };
    if (!opt.bin_average) return at(tau);
    double sum = 0.0;
    for (std::size_t k = 0; k < gl8_nodes.size(); ++k) sum += gl8_weights[k] * at(tau + half * gl8_nodes[k]);
    return 0.5 * sum;
  };
  auto fn = [&](const Eigen::VectorXd& v, Eigen::VectorXd& r) {
    r.resize(static_cast<long>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      std::size_t i = idx[k];
      r[static_cast<long>(k)] = (g2.values[i] - model(v, p.tau[i])) / p.s[i];
    }
  };
  auto res = detail::levenberg_marquardt(fn, q, fixed, scale, opt.max_iterations, opt.tolerance);
  if (!res.converged || !res.params.allFinite()) {
    throw FitError("interference fit did not converge after " + std::to_string(res.iterations) +
                   " iterations (chi2 = " + num(res.chi2) + ")");
  }

  InterferenceFit out;
  const auto& v = res.params;
  out.rho = single ? 0.0 : std::exp(v[0]);
  out.sigma_forward = std::exp(v[1]);
  out.sigma_backward = std::exp(v[2]);
  out.f_mod = v[3];
  out.amplitude = v[4];
  out.visibility = physics::visibility_from_ratio(out.rho);
  out.g2_zero = 1.0 + out.amplitude;
  out.r = out.amplitude > 0.0 ? 1.0 / std::sqrt(out.amplitude) - 1.0 : INFINITY;
  const double total = initial.total_rate();
  out.rate_forward = total / (1.0 + out.rho);
  out.rate_backward = total * out.rho / (1.0 + out.rho);
  const std::array<double, 5> jac{out.rho, out.sigma_forward, out.sigma_backward, 1.0, 1.0};
  for (int a = 0; a < 5; ++a) {
    for (int b = 0; b < 5; ++b) {
      out.covariance[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
          jac[static_cast<std::size_t>(a)] * jac[static_cast<std::size_t>(b)] * res.covariance(a, b);
    }
  }
  out.chi2 = res.chi2;
  std::size_t free = static_cast<std::size_t>(std::count(fixed.begin(), fixed.end(), false));
  out.dof = idx.size() > free ? idx.size() - free : 0;
  out.iterations = res.iterations;
  return out;
}

SweepResult fit_slope(const std::vector<SweepPoint>& sweep) {
  if (sweep.size() < 3) throw DomainError("slope fit needs at least 3 points");
  std::vector<double> mags;
  for (const auto& pt : sweep) mags.push_back(std::abs(pt.detuning));
  std::vector<double> sorted = mags;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw DomainError("slope fit needs distinct detunings");
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    double s = sweep[i].estimate.sigma_f;
    if (!(s > 0.0)) throw DomainError("sweep point without a positive sigma_f");
    double w = 1.0 / (s * s);
    sxx += w * mags[i] * mags[i];
    sxy += w * mags[i] * sweep[i].estimate.f_mod;
  }
  if (!(sxx > 0.0)) throw DomainError("degenerate slope design: all detunings zero");
  SweepResult r;
  r.points = sweep;
  r.alpha = sxy / sxx;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    double z = (sweep[i].estimate.f_mod - r.alpha * mags[i]) / sweep[i].estimate.sigma_f;
    r.residuals.push_back(z);
    r.chi2 += z * z;
  }
  r.dof = sweep.size() - 1;
  r.alpha_stderr_weights = 1.0 / std::sqrt(sxx);
  r.alpha_stderr = r.alpha_stderr_weights * std::sqrt(r.reduced_chi2());
  return r;
}

void fit_loglog(StabilityResult& result) {
  const std::size_t n = result.rows.size();
  if (n < 2) throw StatisticsError("log-log slope needs at least two durations");
  double sx = 0.0, sy = 0.0;
  for (const auto& row : result.rows) {
    if (!(row.std_f > 0.0) || !(row.duration > 0.0)) throw StatisticsError("non-positive std or duration in scan");
    sx += std::log(row.duration);
    sy += std::log(row.std_f);
  }
  const double mx = sx / static_cast<double>(n), my = sy / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (const auto& row : result.rows) {
    double dx = std::log(row.duration) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(row.std_f) - my);
  }
  if (!(sxx > 0.0)) throw StatisticsError("durations must differ");
  result.slope = sxy / sxx;
  result.intercept = my - result.slope * mx;
  double ss = 0.0;
  for (const auto& row : result.rows) {
    double e = std::log(row.std_f) - result.intercept - result.slope * std::log(row.duration);
    ss += e * e;
  }
  result.slope_stderr = n > 2 ? std::sqrt(ss / static_cast<double>(n - 2) / sxx) : 0.0;
}

StabilityResult stability_scan(const Simulator& simulate, const std::vector<double>& durations,
                               std::size_t seeds_per_point, std::uint64_t first_seed, const BeatOptions& options) {
  if (seeds_per_point < 2) throw StatisticsError("stability scan needs at least 2 seeds per duration");
  if (durations.empty()) throw StatisticsError("stability scan needs durations");
  StabilityResult result;
  for (double T : durations) {
    StabilityRow row;
    row.duration = T;
    double sig = 0.0;
    for (std::size_t s = 0; s < seeds_per_point; ++s) {
      try {
        BeatEstimate e = estimate_beat(simulate(T, first_seed + s), options);
        row.f_values.push_back(e.f_mod);
        sig += e.sigma_f;
      } catch (const EstimationError& err) {
        throw EstimationError("at duration " + num(T) + " s: " + err.what());
      }
    }
    const double n = static_cast<double>(row.f_values.size());
    row.mean_f = std::accumulate(row.f_values.begin(), row.f_values.end(), 0.0) / n;
    double ss = 0.0;
    for (double f : row.f_values) ss += (f - row.mean_f) * (f - row.mean_f);
    row.std_f = std::sqrt(ss / (n - 1.0));
    row.mean_sigma_f = sig / n;
    result.rows.push_back(std::move(row));
  }
  if (result.rows.size() >= 2) fit_loglog(result);
  return result;
}

}  // namespace thermobeat::estimate
