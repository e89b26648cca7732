#include "thermobeat/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "thermobeat/errors.hpp"
#include "thermobeat/units.hpp"

namespace thermobeat::synth {

namespace {

// Gaussian field values at the current cluster of candidate times, with the
// Cholesky factor of their covariance and the whitened values w = L^-1 e.
class Cluster {
 public:
  Cluster(const FieldKernel& kernel, std::size_t capacity)
      : kernel_(kernel), cap_(capacity), t_(capacity), w_(capacity), l_(capacity * capacity), y_(capacity),
        x_(capacity) {}

  std::size_t size() const { return m_; }
  double last_time() const { return t_[m_ - 1]; }
  void clear() { m_ = 0; }

  /// Draws the field at time t given the stored points and appends it.
  cplx draw(double t, cplx z) {
    const double c0 = kernel_.variance();
    double explained = 0.0;
    cplx mean(0.0, 0.0);
    for (std::size_t j = 0; j < m_; ++j) {
      cplx acc = kernel_(t_[j] - t);
      const cplx* row = &l_[j * cap_];
      for (std::size_t k = 0; k < j; ++k) acc -= row[k] * y_[k];
      y_[j] = acc / row[j].real();
      explained += std::norm(y_[j]);
      mean += std::conj(y_[j]) * w_[j];
    }
    double var = std::max(c0 - explained, 1e-12 * c0);
    double sd = std::sqrt(var);
    cplx e = mean + sd * z;
    cplx* row = &l_[m_ * cap_];
    for (std::size_t j = 0; j < m_; ++j) row[j] = std::conj(y_[j]);
    row[m_] = sd;
    t_[m_] = t;
    w_[m_] = z;
    ++m_;
    return e;
  }

  double first_time() const { return t_[0]; }

  /// Forgets the oldest point: rank-one update of the trailing factor by
  /// Givens rotations, applied to the whitened values as well.
  void drop_front() {
    const std::size_t n = m_ - 1;
    for (std::size_t i = 0; i < n; ++i) x_[i] = l_[(i + 1) * cap_];
    cplx vx = w_[0];
    for (std::size_t i = 0; i < n; ++i) {
      cplx* dst = &l_[i * cap_];
      const cplx* src = &l_[(i + 1) * cap_ + 1];
      for (std::size_t j = 0; j <= i; ++j) dst[j] = src[j];
      t_[i] = t_[i + 1];
      w_[i] = w_[i + 1];
    }
    for (std::size_t k = 0; k < n; ++k) {
      const double lkk = l_[k * cap_ + k].real();
      const double r = std::sqrt(lkk * lkk + std::norm(x_[k]));
      const double c = lkk / r;
      const cplx s = x_[k] / r;
      for (std::size_t i = k; i < n; ++i) {
        cplx& lik = l_[i * cap_ + k];
        cplx li = lik;
        lik = c * li + std::conj(s) * x_[i];
        x_[i] = -s * li + c * x_[i];
      }
      l_[k * cap_ + k] = r;
      cplx vk = w_[k];
      w_[k] = c * vk + s * vx;
      vx = -std::conj(s) * vk + c * vx;
    }
    m_ = n;
  }

 private:
  const FieldKernel& kernel_;
  std::size_t cap_;
  std::size_t m_ = 0;
  std::vector<double> t_;
  std::vector<cplx> w_, l_, y_, x_;
};

struct ChunkResult {
  std::vector<std::int64_t> ticks;
  SamplerStats stats;
};

}  // namespace

std::vector<std::int64_t> sample_photons(const SamplerInput& in, const SamplerOptions& opt, SamplerStats* stats) {
  if (in.kernel == nullptr) throw DomainError("sampler needs a field kernel");
  if (!(in.duration > 0.0)) throw DomainError("duration must be positive");
  if (!(in.rephase_interval > 0.0)) throw DomainError("rephase_interval must be positive");
  if (!(in.efficiency >= 0.0 && in.efficiency <= 1.0)) throw DomainError("efficiency must lie in [0, 1]");
  if (!(opt.kappa > 0.0) || opt.max_cluster < 2) throw DomainError("invalid sampler options");

  const FieldKernel& kernel = *in.kernel;
  const double chaotic = kernel.variance();
  const double a2 = in.coherent_amplitude * in.coherent_amplitude;
  const bool interfering = in.coherent_mode == CoherentMode::interfering;
  const double bound_intensity = interfering ? std::pow(std::sqrt(opt.kappa * chaotic) + std::abs(in.coherent_amplitude), 2)
                                             : opt.kappa * chaotic + a2;
  const double rate = in.efficiency * bound_intensity;
  const double window = kernel.extent();

  const double block = in.rephase_interval;
  const double blocks_per_chunk = std::max(1.0, std::round(opt.chunk_duration / block));
  const double chunk_len = blocks_per_chunk * block;
  const auto n_chunks = static_cast<std::size_t>(std::ceil(in.duration / chunk_len - 1e-12));

  std::vector<ChunkResult> results(n_chunks);
  auto run_chunk = [&](std::size_t c) {
    ChunkResult& out = results[c];
    if (!(rate > 0.0)) return;
    Rng rng = make_rng(in.seed, Stream::candidates, c);
    std::exponential_distribution<double> gap(rate);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    Cluster cluster(kernel, opt.max_cluster);
    const double start = static_cast<double>(c) * chunk_len;
    const double stop = std::min(in.duration, start + chunk_len);
    double t = start;
    std::int64_t current_block = -1;
    while (true) {
      t += gap(rng);
      if (t >= stop) break;
      ++out.stats.candidates;
      auto b = static_cast<std::int64_t>(std::floor(t / block));
      if (b != current_block) {
        cluster.clear();
        current_block = b;
      } else if (cluster.size() > 0 && t - cluster.last_time() > window) {
        cluster.clear();
      } else {
        while (cluster.size() > 0 && (cluster.size() == opt.max_cluster || t - cluster.first_time() > window)) {
          cluster.drop_front();
        }
      }
      cplx z(normal(rng), normal(rng));
      cplx e = cluster.draw(t, z);
      out.stats.max_cluster = std::max(out.stats.max_cluster, cluster.size());
      double intensity = interfering ? std::norm(e + in.coherent_amplitude) : std::norm(e) + a2;
      double p = in.efficiency * intensity / rate;
      if (p > 1.0) ++out.stats.clipped;
      if (uniform01(rng) < p) {
        out.ticks.push_back(std::llround(t * static_cast<double>(constants::ticks_per_second)));
        ++out.stats.photons;
      }
    }
  };

  unsigned workers = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(n_chunks)));
  if (workers == 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t c = next++; c < n_chunks; c = next++) run_chunk(c);
      });
    }
    for (auto& th : pool) th.join();
  }

  std::vector<std::int64_t> ticks;
  SamplerStats total;
  std::size_t n = 0;
  for (auto& r : results) n += r.ticks.size();
  ticks.reserve(n);
  for (auto& r : results) {
    ticks.insert(ticks.end(), r.ticks.begin(), r.ticks.end());
    total.candidates += r.stats.candidates;
    total.photons += r.stats.photons;
    total.clipped += r.stats.clipped;
    total.max_cluster = std::max(total.max_cluster, r.stats.max_cluster);
  }
  if (stats) *stats = total;
  return ticks;
}

}  // namespace thermobeat::synth
