#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "thermobeat/correlate.hpp"
#include "thermobeat/errors.hpp"
#include "thermobeat/physics.hpp"

using namespace thermobeat;
using namespace thermobeat::correlate;
using detect::TimestampStream;
using doctest::Approx;

namespace {

TimestampStream poisson_stream(int channel, double rate, double duration, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> gap(rate);
  TimestampStream s;
  s.channel = channel;
  s.duration = duration;
  double t = gap(rng);
  std::int64_t last = -1;
  while (t < duration) {
    auto tick = static_cast<std::int64_t>(t * 1e12);
    if (tick > last) s.times.push_back(tick);
    last = tick;
    t += gap(rng);
  }
  return s;
}

// All pairs, bin found by scanning edges.
std::vector<std::uint64_t> brute_force(const TimestampStream& a, const TimestampStream& b, std::int64_t w, long K) {
  std::vector<std::uint64_t> counts(2 * K + 1, 0);
  for (auto ta : a.times) {
    for (auto tb : b.times) {
      std::int64_t d = tb - ta;
      std::int64_t ad = d < 0 ? -d : d;
      for (long k = 0; k <= K; ++k) {
        bool inside = k == 0 ? 2 * ad <= w : (2 * k - 1) * w < 2 * ad && 2 * ad <= (2 * k + 1) * w;
        if (inside) {
          ++counts[static_cast<std::size_t>(d < 0 ? K - k : K + k)];
          break;
        }
      }
    }
  }
  return counts;
}

}  // namespace

TEST_CASE("single coincident pair lands in the centre bin") {
  TimestampStream a{0, {1000}, 1e-6}, b{1, {1000}, 1e-6};
  Histogram h = coincidence_histogram(a, b, 1e-9, 10e-9);
  CHECK(h.total() == 1);
  CHECK(h.counts[static_cast<std::size_t>(h.half_bins)] == 1);
  CHECK(h.half_bins == 10);
  CHECK(h.centres()[10] == 0.0);
}

TEST_CASE("bin edges") {
  const std::int64_t w = 1000;
  CHECK(bin_index(0, w, 5) == 5);
  CHECK(bin_index(500, w, 5) == 5);
  CHECK(bin_index(-500, w, 5) == 5);
  CHECK(bin_index(501, w, 5) == 6);
  CHECK(bin_index(-501, w, 5) == 4);
  CHECK(bin_index(1500, w, 5) == 6);
  CHECK(bin_index(1501, w, 5) == 7);
  CHECK(bin_index(5500, w, 5) == 10);
  CHECK(bin_index(5501, w, 5) == -1);
  CHECK(bin_index(-5501, w, 5) == -1);
  // odd width: edges fall between ticks
  CHECK(bin_index(1, 3, 2) == 2);
  CHECK(bin_index(2, 3, 2) == 3);
  CHECK(bin_index(4, 3, 2) == 3);
  CHECK(bin_index(5, 3, 2) == 4);
}

TEST_CASE("brute force oracle on random streams") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    double duration = 1e-4 * (1 + trial % 5);
    double ra = 2e6 + 1e6 * (trial % 3), rb = 3e6;
    auto a = poisson_stream(0, ra, duration, rng());
    auto b = poisson_stream(1, rb, duration, rng());
    if (trial % 7 == 0) b.times.insert(b.times.end(), a.times.begin(), a.times.end());
    std::sort(b.times.begin(), b.times.end());
    b.times.erase(std::unique(b.times.begin(), b.times.end()), b.times.end());
    double bw = (trial % 2 ? 1e-9 : 0.75e-9);
    double tmax = 0.2e-6;
    Histogram h = coincidence_histogram(a, b, bw, tmax);
    CHECK(h.counts == brute_force(a, b, h.width_ticks, h.half_bins));
    HistogramOptions o;
    o.chunks = 8;
    o.threads = 3;
    CHECK(coincidence_histogram(a, b, bw, tmax, o).counts == h.counts);
  }
}

TEST_CASE("swap symmetry") {
  auto a = poisson_stream(0, 5e6, 1e-3, 5);
  auto b = poisson_stream(1, 4e6, 1e-3, 6);
  for (double bw : {1e-9, 0.5e-9, 1.7e-9}) {
    auto h1 = coincidence_histogram(a, b, bw, 50e-9);
    auto h2 = coincidence_histogram(b, a, bw, 50e-9);
    std::vector<std::uint64_t> rev(h2.counts.rbegin(), h2.counts.rend());
    CHECK(h1.counts == rev);
  }
}

TEST_CASE("centre bin width bookkeeping") {
  Histogram h = coincidence_histogram({0, {0}, 1e-6}, {1, {0}, 1e-6}, 1e-9, 5e-9);
  CHECK(h.bin_ticks[static_cast<std::size_t>(h.half_bins)] == 1001);
  CHECK(h.bin_ticks[0] == 1000);
  Histogram odd = coincidence_histogram({0, {0}, 1e-6}, {1, {0}, 1e-6}, 1.001e-9, 5e-9);
  CHECK(odd.bin_ticks[static_cast<std::size_t>(odd.half_bins)] == 1001);
  std::int64_t sum = 0;
  for (auto t : h.bin_ticks) sum += t;
  CHECK(sum == 2 * 5500 + 1);
}

TEST_CASE("independent Poisson streams are flat") {
  double T = 2.0, ra = 2e5, rb = 3e5, bw = 1e-9;
  auto a = poisson_stream(0, ra, T, 11);
  auto b = poisson_stream(1, rb, T, 12);
  G2Curve g = compute_g2(a, b, bw, 100e-9);
  double mean_expected = a.rate() * b.rate() * bw * T;
  double chi2 = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double expected = mean_expected * (i == g.centre_index() ? 1.001 : 1.0);
    double c = static_cast<double>(g.counts[i]);
    CHECK(std::abs(c - expected) < 4.5 * std::sqrt(expected));
    chi2 += (c - expected) * (c - expected) / expected;
    CHECK(g.sigma[i] == Approx(std::sqrt(c) / (a.rate() * b.rate() * bw * T) / (i == g.centre_index() ? 1.001 : 1.0)));
  }
  double dof = static_cast<double>(g.size());
  CHECK(std::abs(chi2 - dof) < 5 * std::sqrt(2 * dof));
  G2Curve p = compute_g2(a, b, bw, 100e-9, Normalization::plateau);
  double m = 0.0;
  for (double v : p.values) m += v;
  CHECK(m / static_cast<double>(p.size()) == Approx(1.0).epsilon(0.01));
}

TEST_CASE("normalization scaling with duration") {
  // stderr/value falls by sqrt(2) when the duration doubles
  double r1 = 0, r2 = 0;
  for (std::uint64_t s = 0; s < 6; ++s) {
    auto a = poisson_stream(0, 3e5, 0.5, 100 + s), b = poisson_stream(1, 3e5, 0.5, 200 + s);
    auto c = poisson_stream(0, 3e5, 1.0, 300 + s), d = poisson_stream(1, 3e5, 1.0, 400 + s);
    auto g1 = compute_g2(a, b, 1e-9, 20e-9), g2 = compute_g2(c, d, 1e-9, 20e-9);
    for (std::size_t i = 0; i < g1.size(); ++i) {
      r1 += g1.sigma[i] / g1.values[i];
      r2 += g2.sigma[i] / g2.values[i];
    }
  }
  CHECK(r1 / r2 == Approx(std::sqrt(2.0)).epsilon(0.02));
}

TEST_CASE("correlate errors") {
  TimestampStream a{0, {5, 3}, 1e-6}, b{1, {1}, 1e-6};
  CHECK_THROWS_AS(coincidence_histogram(a, b, 1e-9, 10e-9), DataError);
  TimestampStream ok{0, {1, 2}, 1e-6};
  CHECK_THROWS_AS(coincidence_histogram(ok, b, 0.0, 10e-9), DomainError);
  CHECK_THROWS_AS(coincidence_histogram(ok, b, 1e-9, 0.5e-9), DomainError);
  CHECK_THROWS_AS(coincidence_histogram(ok, b, 1.5e-12, 10e-9), DomainError);
  Histogram h = coincidence_histogram(ok, b, 1e-9, 10e-9);
  CHECK_THROWS_AS(normalize_g2(h, {0.0, 1.0}, 1.0), DomainError);
  CHECK_THROWS_AS(normalize_g2(h, {1.0, 1.0}, 5e-9), DomainError);
  TimestampStream empty{0, {}, 1e-6};
  CHECK_THROWS_AS(compute_g2(empty, b, 1e-9, 10e-9), DomainError);
}

TEST_CASE("residual comparison and Siegert relation") {
  physics::ExperimentParams p;
  auto mix = physics::make_mix(p);
  auto grid = symmetric_tau_grid(1e-9, 200e-9);
  G2Curve expected = physics::predict_g2(mix, grid);
  G2Curve measured = expected;
  measured.sigma.assign(measured.size(), 1e-3);
  ResidualReport r = compare_g2(measured, expected);
  CHECK(r.max_abs_residual == 0.0);
  CHECK(r.chi2 == 0.0);
  CHECK(r.dof == grid.size());

  G1Curve gf, gb;
  for (std::size_t i = 0; i <= 400; ++i) {
    double t = i * 0.5e-9;
    auto cf = mix.forward.g1(t), cb = mix.backward.g1(t);
    gf.tau.push_back(t);
    gf.magnitude.push_back(std::abs(cf));
    gf.phase.push_back(std::arg(cf));
    gb.tau.push_back(t);
    gb.magnitude.push_back(std::abs(cb));
    gb.phase.push_back(std::arg(cb));
  }
  // per-class curves are baseband here, beat supplied separately
  for (auto& ph : gb.phase) ph = 0.0;
  double beat = mix.backward.center_offset;
  ResidualReport s = siegert_check(gf, gb, measured, {p.rate_forward, p.rate_backward}, beat);
  CHECK(s.max_abs_residual < 1e-6);
  ResidualReport wrong = siegert_check(gf, gb, measured, {p.rate_forward, p.rate_backward}, beat + 3e6);
  CHECK(wrong.reduced_chi2() > 10.0);
  CHECK(!wrong.consistent());

  G1Curve bad = gf;
  bad.tau.resize(10);
  bad.magnitude.resize(10);
  bad.phase.resize(10);
  CHECK_THROWS_AS(siegert_check(bad, gb, measured, {1.0, 1.0}, beat), DataError);
}
