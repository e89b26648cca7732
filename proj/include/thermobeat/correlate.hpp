#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "thermobeat/curves.hpp"
#include "thermobeat/detect.hpp"

namespace thermobeat::correlate {

/// Raw coincidence counts on bins centred at k * bin_width, |k| <= half_bins.
///
/// A lag d (ticks) belongs to bin 0 when |d| <= w/2 and to bin k > 0 when
/// k w - w/2 < |d| <= k w + w/2, mirrored for negative lags. The rule is
/// symmetric in d, so swapping the streams mirrors the histogram exactly.
/// With an even tick width the centre bin spans one tick more than the
/// others; `bin_ticks` records the exact span of every bin.
struct Histogram {
  std::vector<std::uint64_t> counts;
  std::vector<std::int64_t> bin_ticks;
  std::int64_t width_ticks = 0;
  long half_bins = 0;

  double bin_width() const;
  std::vector<double> centres() const;
  std::uint64_t total() const;
};

struct HistogramOptions {
  unsigned chunks = 1;   // independent partitions of stream a
  unsigned threads = 1;  // workers over the partitions
};

/// Index of the bin holding lag d, or -1 when |d| is beyond the last bin.
long bin_index(std::int64_t d, std::int64_t width_ticks, long half_bins);

/// Counts of pairs (t_b - t_a) by two-pointer sweep, O(n_a + n_b + pairs).
/// bin_width must be a whole number of ticks. Throws DataError on unsorted input.
Histogram coincidence_histogram(const detect::TimestampStream& a, const detect::TimestampStream& b,
                                double bin_width, double tau_max, const HistogramOptions& options = {});

/// counts / (r_a r_b bin_width duration), Poisson standard errors.
G2Curve normalize_g2(const Histogram& hist, std::pair<double, double> rates, double duration);

/// Divides by the mean count of bins with |tau| >= plateau_from instead of
/// the rate product.
G2Curve normalize_g2_plateau(const Histogram& hist, std::pair<double, double> rates, double duration,
                             double plateau_from);

enum class Normalization { rates, plateau };

/// Histogram plus normalization in one call, rates taken from the streams.
G2Curve compute_g2(const detect::TimestampStream& a, const detect::TimestampStream& b, double bin_width,
                   double tau_max, Normalization norm = Normalization::rates,
                   const HistogramOptions& options = {});

struct ResidualReport {
  std::vector<double> tau;
  std::vector<double> residuals;  // (measured - expected) / stderr
  double max_abs_residual = 0.0;
  double chi2 = 0.0;
  std::size_t dof = 0;
  double reduced_chi2() const { return dof ? chi2 / static_cast<double>(dof) : 0.0; }
  /// max |residual| < 5 and reduced chi2 inside its 4 sigma band.
  bool consistent() const;
};

enum class ErrorModel {
  expected,  // Pearson: Poisson error of the expected count, when raw counts are known
  measured,  // Neyman: the curve's own stderr
};

/// Residuals of `measured` against `expected` on bins with |tau| <= tau_limit
/// and nonzero stderr. The expected curve is linearly interpolated. Curves
/// without raw counts always use their own stderr.
ResidualReport compare_g2(const G2Curve& measured, const G2Curve& expected, double tau_limit = 0.0,
                          ErrorModel errors = ErrorModel::expected);

/// Event-based g2 against the two-source Siegert relation built from
/// per-class first-order coherence curves.
ResidualReport siegert_check(const G1Curve& g1_forward, const G1Curve& g1_backward, const G2Curve& g2,
                             std::pair<double, double> rates, double beat,
                             ErrorModel errors = ErrorModel::expected);
/// Single-field form: g2 = 1 + |g1|^2 with g1 of the total field.
ResidualReport siegert_check(const G1Curve& g1, const G2Curve& g2, ErrorModel errors = ErrorModel::expected);

}  // namespace thermobeat::correlate
