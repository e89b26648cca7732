#include "thermobeat/detect.hpp"

#include <algorithm>
#include <cmath>

#include "thermobeat/errors.hpp"
#include "thermobeat/units.hpp"

namespace thermobeat::detect {

namespace {

constexpr std::int64_t chunk_ticks = 1'000'000'000;  // 1 ms
constexpr double tps = static_cast<double>(constants::ticks_per_second);

std::int64_t to_ticks(double seconds) { return std::llround(seconds * tps); }

}  // namespace

void DetectorSpec::validate() const {
  if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw DomainError("detector.efficiency must lie in [0, 1]");
  if (!(dark_rate >= 0.0) || !std::isfinite(dark_rate)) throw DomainError("detector.dark_rate must be non-negative");
  if (!(jitter_sigma >= 0.0) || !std::isfinite(jitter_sigma)) throw DomainError("detector.jitter_sigma must be non-negative");
  if (!(dead_time >= 0.0) || !std::isfinite(dead_time)) throw DomainError("detector.dead_time must be non-negative");
  if (!(splitter_ratio > 0.0 && splitter_ratio < 1.0)) throw DomainError("detector.splitter_ratio must lie in (0, 1)");
}

DetectorSpec DetectorSpec::ideal() {
  DetectorSpec d;
  d.jitter_sigma = 0.0;
  return d;
}

void TimestampStream::validate() const {
  const std::int64_t end = to_ticks(duration);
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0 || times[i] > end) throw DataError("timestamp outside [0, duration]");
    if (i > 0 && times[i] <= times[i - 1]) throw DataError("timestamps not strictly increasing");
  }
}

double TimestampStream::rate() const {
  if (!(duration > 0.0)) throw DomainError("stream duration must be positive");
  return static_cast<double>(times.size()) / duration;
}

IntensityTrace intensity_trace(const synth::FieldTrace& trace) {
  IntensityTrace it;
  it.dt = trace.dt;
  it.start_time = trace.start_time;
  it.samples.resize(trace.samples.size());
  for (std::size_t i = 0; i < it.samples.size(); ++i) it.samples[i] = std::norm(trace.samples[i]);
  return it;
}

std::vector<std::int64_t> apply_dead_time(const std::vector<std::int64_t>& ticks, std::int64_t dead_ticks) {
  std::vector<std::int64_t> out;
  out.reserve(ticks.size());
  const std::int64_t gap = std::max<std::int64_t>(dead_ticks, 1);
  for (std::int64_t t : ticks) {
    if (out.empty() || t - out.back() >= gap) out.push_back(t);
  }
  return out;
}

std::pair<TimestampStream, TimestampStream> generate_events(const IntensityTrace& intensity,
                                                            const DetectorSpec& det, std::uint64_t seed) {
  det.validate();
  if (!(intensity.dt > 0.0)) throw DomainError("intensity dt must be positive");
  double imax = 0.0;
  for (double v : intensity.samples) {
    if (!(v >= 0.0)) throw DomainError("intensity must be non-negative");
    imax = std::max(imax, v);
  }
  if (imax * intensity.dt * det.efficiency >= 0.1) {
    throw ConfigError("intensity grid too coarse: max(I) * dt * efficiency = " +
                      num(imax * intensity.dt * det.efficiency) + " >= 0.1");
  }
  const double t0 = intensity.start_time;
  const double t1 = t0 + intensity.duration();
  const double rate = det.efficiency * imax;

  std::vector<std::int64_t> photons;
  if (rate > 0.0 && !intensity.samples.empty()) {
    const auto first = static_cast<std::int64_t>(std::floor(t0 * tps / static_cast<double>(chunk_ticks)));
    const auto last = static_cast<std::int64_t>(std::ceil(t1 * tps / static_cast<double>(chunk_ticks)));
    for (std::int64_t c = first; c < last; ++c) {
      Rng rng = make_rng(seed, Stream::trace_events, static_cast<std::uint64_t>(c));
      std::exponential_distribution<double> gap(rate);
      double t = std::max(t0, static_cast<double>(c * chunk_ticks) / tps);
      const double stop = std::min(t1, static_cast<double>((c + 1) * chunk_ticks) / tps);
      while (true) {
        t += gap(rng);
        if (t >= stop) break;
        auto k = static_cast<std::size_t>((t - t0) / intensity.dt);
        k = std::min(k, intensity.samples.size() - 1);
        if (uniform01(rng) * rate < det.efficiency * intensity.samples[k]) photons.push_back(to_ticks(t));
      }
    }
  }
  return detect_photons(photons, t1, det, seed);
}

std::pair<TimestampStream, TimestampStream> detect_photons(const std::vector<std::int64_t>& photon_ticks,
                                                           double duration, const DetectorSpec& det,
                                                           std::uint64_t seed) {
  det.validate();
  if (!(duration > 0.0)) throw DomainError("duration must be positive");
  const std::int64_t end = to_ticks(duration);

  std::vector<std::int64_t> routed[2];
  {
    std::int64_t chunk = -1;
    Rng rng;
    for (std::size_t i = 0; i < photon_ticks.size(); ++i) {
      std::int64_t t = photon_ticks[i];
      if (i > 0 && t < photon_ticks[i - 1]) throw DataError("photon ticks must be sorted");
      std::int64_t c = t / chunk_ticks;
      if (c != chunk) {
        rng = make_rng(seed, Stream::routing, static_cast<std::uint64_t>(c));
        chunk = c;
      }
      routed[uniform01(rng) < det.splitter_ratio ? 0 : 1].push_back(t);
    }
  }

  std::pair<TimestampStream, TimestampStream> out;
  TimestampStream* streams[2] = {&out.first, &out.second};
  const std::int64_t n_chunks = (end + chunk_ticks - 1) / chunk_ticks;
  for (int ch = 0; ch < 2; ++ch) {
    std::vector<std::int64_t> events = std::move(routed[ch]);
    if (det.dark_rate > 0.0) {
      std::vector<std::int64_t> dark;
      for (std::int64_t c = 0; c < n_chunks; ++c) {
        Rng rng = make_rng(seed, Stream::dark_counts, static_cast<std::uint64_t>(2 * c + ch));
        std::exponential_distribution<double> gap(det.dark_rate);
        const double stop = static_cast<double>(std::min(end, (c + 1) * chunk_ticks)) / tps;
        double t = static_cast<double>(c * chunk_ticks) / tps;
        while ((t += gap(rng)) < stop) dark.push_back(to_ticks(t));
      }
      std::vector<std::int64_t> merged(events.size() + dark.size());
      std::merge(events.begin(), events.end(), dark.begin(), dark.end(), merged.begin());
      events.swap(merged);
    }
    events = apply_dead_time(events, to_ticks(det.dead_time));
    if (det.jitter_sigma > 0.0) {
      const double sj = det.jitter_sigma * tps;
      std::int64_t chunk = -1;
      Rng rng;
      std::normal_distribution<double> normal(0.0, 1.0);
      for (auto& t : events) {
        std::int64_t c = t / chunk_ticks;
        if (c != chunk) {
          rng = make_rng(seed, Stream::jitter, static_cast<std::uint64_t>(2 * c + ch));
          normal.reset();
          chunk = c;
        }
        t += std::llround(sj * normal(rng));
      }
      std::sort(events.begin(), events.end());
    }
    std::vector<std::int64_t> kept;
    kept.reserve(events.size());
    for (std::int64_t t : events) {
      if (t < 0 || t > end) continue;
      if (!kept.empty() && t == kept.back()) continue;
      kept.push_back(t);
    }
    streams[ch]->channel = ch;
    streams[ch]->times = std::move(kept);
    streams[ch]->duration = duration;
  }
  return out;
}

}  // namespace thermobeat::detect
