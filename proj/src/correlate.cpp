#include "thermobeat/correlate.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <thread>

#include "thermobeat/errors.hpp"
#include "thermobeat/units.hpp"

namespace thermobeat::correlate {

namespace {

constexpr double tps = static_cast<double>(constants::ticks_per_second);

void require_sorted(const detect::TimestampStream& s, const char* name) {
  for (std::size_t i = 1; i < s.times.size(); ++i) {
    if (s.times[i] < s.times[i - 1]) throw DataError(std::string("stream ") + name + " is not sorted");
  }
}

}  // namespace

double Histogram::bin_width() const { return static_cast<double>(width_ticks) / tps; }

std::vector<double> Histogram::centres() const {
  std::vector<double> c;
  for (long k = -half_bins; k <= half_bins; ++k) c.push_back(static_cast<double>(k) * bin_width());
  return c;
}

std::uint64_t Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }

long bin_index(std::int64_t d, std::int64_t w, long half_bins) {
  std::int64_t a = d < 0 ? -d : d;
  std::int64_t twice = 2 * a;
  long k = twice <= w ? 0 : static_cast<long>((twice - w + 2 * w - 1) / (2 * w));
  if (k > half_bins) return -1;
  return d < 0 ? half_bins - k : half_bins + k;
}

Histogram coincidence_histogram(const detect::TimestampStream& a, const detect::TimestampStream& b,
                                double bin_width, double tau_max, const HistogramOptions& options) {
  if (!(bin_width > 0.0)) throw DomainError("bin_width must be positive");
  if (!(tau_max >= bin_width)) throw DomainError("tau_max must be at least bin_width");
  const std::int64_t w = std::llround(bin_width * tps);
  if (w < 1 || std::abs(static_cast<double>(w) - bin_width * tps) > 1e-6 * bin_width * tps + 1e-3) {
    throw DomainError("bin_width must be a whole number of picoseconds");
  }
  require_sorted(a, "a");
  require_sorted(b, "b");

  Histogram h;
  h.width_ticks = w;
  h.half_bins = std::lround(tau_max / bin_width);
  const long nbins = 2 * h.half_bins + 1;
  h.bin_ticks.assign(static_cast<std::size_t>(nbins), w);
  h.bin_ticks[static_cast<std::size_t>(h.half_bins)] = 2 * (w / 2) + 1;
  const std::int64_t reach = (2 * static_cast<std::int64_t>(h.half_bins) * w + w) / 2;

  const unsigned chunks = std::max(1u, options.chunks);
  std::vector<std::vector<std::uint64_t>> partial(chunks, std::vector<std::uint64_t>(static_cast<std::size_t>(nbins), 0));
  const auto& ta = a.times;
  const auto& tb = b.times;
  auto run = [&](unsigned c) {
    std::size_t i0 = ta.size() * c / chunks;
    std::size_t i1 = ta.size() * (c + 1) / chunks;
    if (i0 >= i1) return;
    auto& out = partial[c];
    std::size_t j = static_cast<std::size_t>(std::lower_bound(tb.begin(), tb.end(), ta[i0] - reach) - tb.begin());
    for (std::size_t i = i0; i < i1; ++i) {
      const std::int64_t lo = ta[i] - reach;
      const std::int64_t hi = ta[i] + reach;
      while (j < tb.size() && tb[j] < lo) ++j;
      for (std::size_t k = j; k < tb.size() && tb[k] <= hi; ++k) {
        ++out[static_cast<std::size_t>(bin_index(tb[k] - ta[i], w, h.half_bins))];
      }
    }
  };
  const unsigned workers = std::max(1u, std::min(options.threads, chunks));
  if (workers == 1) {
    for (unsigned c = 0; c < chunks; ++c) run(c);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        for (unsigned c = t; c < chunks; c += workers) run(c);
      });
    }
    for (auto& th : pool) th.join();
  }
  h.counts.assign(static_cast<std::size_t>(nbins), 0);
  for (const auto& p : partial) {
    for (std::size_t k = 0; k < p.size(); ++k) h.counts[k] += p[k];
  }
  return h;
}

namespace {

G2Curve scaled_curve(const Histogram& hist, std::pair<double, double> rates, double duration,
                     const std::vector<double>& scale) {
  G2Curve g;
  g.tau = hist.centres();
  g.bin_width = hist.bin_width();
  g.rates = rates;
  g.duration = duration;
  g.counts = hist.counts;
  g.total_coincidences = hist.total();
  g.values.resize(hist.counts.size());
  g.sigma.resize(hist.counts.size());
  for (std::size_t k = 0; k < hist.counts.size(); ++k) {
    double c = static_cast<double>(hist.counts[k]);
    g.values[k] = c / scale[k];
    g.sigma[k] = std::sqrt(c) / scale[k];
  }
  return g;
}

void check_normalization_inputs(const Histogram& hist, std::pair<double, double> rates, double duration) {
  if (!(rates.first > 0.0) || !(rates.second > 0.0)) throw DomainError("normalization needs positive rates");
  if (!(duration > static_cast<double>(hist.half_bins) * hist.bin_width())) {
    throw DomainError("duration must exceed tau_max");
  }
}

}  // namespace

G2Curve normalize_g2(const Histogram& hist, std::pair<double, double> rates, double duration) {
  check_normalization_inputs(hist, rates, duration);
  std::vector<double> scale(hist.counts.size());
  for (std::size_t k = 0; k < scale.size(); ++k) {
    scale[k] = rates.first * rates.second * (static_cast<double>(hist.bin_ticks[k]) / tps) * duration;
  }
  return scaled_curve(hist, rates, duration, scale);
}

G2Curve normalize_g2_plateau(const Histogram& hist, std::pair<double, double> rates, double duration,
                             double plateau_from) {
  check_normalization_inputs(hist, rates, duration);
  const double w = hist.bin_width();
  double sum = 0.0, span = 0.0;
  for (long k = -hist.half_bins; k <= hist.half_bins; ++k) {
    if (std::abs(static_cast<double>(k) * w) + 1e-15 < plateau_from) continue;
    auto i = static_cast<std::size_t>(k + hist.half_bins);
    sum += static_cast<double>(hist.counts[i]);
    span += static_cast<double>(hist.bin_ticks[i]);
  }
  if (!(sum > 0.0)) throw StatisticsError("plateau region holds no coincidences");
  const double per_tick = sum / span;
  std::vector<double> scale(hist.counts.size());
  for (std::size_t k = 0; k < scale.size(); ++k) scale[k] = per_tick * static_cast<double>(hist.bin_ticks[k]);
  return scaled_curve(hist, rates, duration, scale);
}

G2Curve compute_g2(const detect::TimestampStream& a, const detect::TimestampStream& b, double bin_width,
                   double tau_max, Normalization norm, const HistogramOptions& options) {
  Histogram h = coincidence_histogram(a, b, bin_width, tau_max, options);
  if (!(a.duration > 0.0) || a.duration != b.duration) throw DataError("streams need equal positive durations");
  std::pair<double, double> rates{a.rate(), b.rate()};
  if (norm == Normalization::plateau) return normalize_g2_plateau(h, rates, a.duration, 0.8 * tau_max);
  return normalize_g2(h, rates, a.duration);
}

bool ResidualReport::consistent() const {
  if (dof == 0) return false;
  return max_abs_residual < 5.0 && reduced_chi2() < 1.0 + 4.0 * std::sqrt(2.0 / static_cast<double>(dof));
}

namespace {

double interpolate(const std::vector<double>& x, const std::vector<double>& y, double at, double tol) {
  if (x.empty()) throw DataError("empty reference curve");
  if (at < x.front() - tol || at > x.back() + tol) throw DataError("curve grids do not overlap");
  if (at <= x.front()) return y.front();
  if (at >= x.back()) return y.back();
  auto it = std::upper_bound(x.begin(), x.end(), at);
  std::size_t i = static_cast<std::size_t>(it - x.begin()) - 1;
  double t = (at - x[i]) / (x[i + 1] - x[i]);
  return y[i] + t * (y[i + 1] - y[i]);
}

template <class Expected>
ResidualReport residuals(const G2Curve& g2, double tau_limit, ErrorModel errors, Expected&& expected) {
  ResidualReport r;
  const bool pearson = errors == ErrorModel::expected && g2.counts.size() == g2.size();
  for (std::size_t k = 0; k < g2.size(); ++k) {
    if (tau_limit > 0.0 && std::abs(g2.tau[k]) > tau_limit + 1e-15) continue;
    if (!(g2.sigma[k] > 0.0)) continue;
    const double e = expected(g2.tau[k]);
    double sigma = g2.sigma[k];
    // Poisson stderr scales as sqrt(value); rescale it to the expected count
    if (pearson && g2.values[k] > 0.0 && e > 0.0) sigma *= std::sqrt(e / g2.values[k]);
    double z = (g2.values[k] - e) / sigma;
    r.tau.push_back(g2.tau[k]);
    r.residuals.push_back(z);
    r.chi2 += z * z;
    r.max_abs_residual = std::max(r.max_abs_residual, std::abs(z));
  }
  r.dof = r.residuals.size();
  return r;
}

std::complex<double> g1_at(const G1Curve& g1, double tau, double tol) {
  double a = std::abs(tau);
  if (g1.tau.empty()) throw DataError("empty g1 curve");
  if (a > g1.tau.back() + tol) throw DataError("g1 curve does not cover the g2 lag range");
  auto it = std::upper_bound(g1.tau.begin(), g1.tau.end(), a);
  std::size_t i = it == g1.tau.begin() ? 0 : static_cast<std::size_t>(it - g1.tau.begin()) - 1;
  std::size_t j = std::min(i + 1, g1.tau.size() - 1);
  auto value = [&g1](std::size_t n) { return std::polar(g1.magnitude[n], g1.phase[n]); };
  double t = j == i ? 0.0 : std::clamp((a - g1.tau[i]) / (g1.tau[j] - g1.tau[i]), 0.0, 1.0);
  std::complex<double> v = value(i) + t * (value(j) - value(i));
  return tau < 0.0 ? std::conj(v) : v;
}

}  // namespace

ResidualReport compare_g2(const G2Curve& measured, const G2Curve& expected, double tau_limit, ErrorModel errors) {
  const double tol = 1e-3 * std::max(measured.bin_width, expected.bin_width);
  return residuals(measured, tau_limit, errors,
                   [&](double t) { return interpolate(expected.tau, expected.values, t, tol); });
}

ResidualReport siegert_check(const G1Curve& g1_forward, const G1Curve& g1_backward, const G2Curve& g2,
                             std::pair<double, double> rates, double beat, ErrorModel errors) {
  const double total = rates.first + rates.second;
  if (!(total > 0.0) || rates.first < 0.0 || rates.second < 0.0) throw DomainError("siegert_check needs non-negative rates");
  const double tol = 1e-3 * g2.bin_width;
  return residuals(g2, 0.0, errors, [&](double t) {
    std::complex<double> f(0.0, 0.0);
    if (rates.first > 0.0) f += rates.first * g1_at(g1_forward, t, tol);
    if (rates.second > 0.0) {
      f += rates.second * g1_at(g1_backward, t, tol) * std::polar(1.0, constants::two_pi * beat * t);
    }
    return 1.0 + std::norm(f) / (total * total);
  });
}

ResidualReport siegert_check(const G1Curve& g1, const G2Curve& g2, ErrorModel errors) {
  const double tol = 1e-3 * g2.bin_width;
  return residuals(g2, 0.0, errors, [&](double t) { return 1.0 + std::norm(g1_at(g1, t, tol)); });
}

}  // namespace thermobeat::correlate
