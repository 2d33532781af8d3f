#include "ejecta/dvs.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <set>
#include <stdexcept>

#include "ejecta/parallel.hpp"
#include "ejecta/rng.hpp"

namespace ejecta::dvs {

namespace {

// RNG stream tags; every noise draw is keyed on (seed, tag, pixel).
constexpr std::uint64_t kLeakStream = 1;
constexpr std::uint64_t kShotOnStream = 2;
constexpr std::uint64_t kShotOffStream = 3;
constexpr std::uint64_t kHotSelectStream = 4;
constexpr std::uint64_t kHotEventStream = 5;

}  // namespace

void DvsConfig::validate() const {
  if (!(theta_on > 0.0 && theta_on <= 2.0) || !(theta_off > 0.0 && theta_off <= 2.0)) {
    throw std::invalid_argument("dvs: contrast thresholds must lie in (0, 2]");
  }
  if (!(i_floor > 0.0)) throw std::invalid_argument("dvs: i_floor must be > 0");
  if (leak_rate_hz < 0.0 || shot_rate_hz < 0.0 || hot_pixel_rate_hz < 0.0) {
    throw std::invalid_argument("dvs: noise rates must be >= 0");
  }
  if (!(hot_pixel_fraction >= 0.0 && hot_pixel_fraction < 1.0)) {
    throw std::invalid_argument("dvs: hot_pixel_fraction must lie in [0, 1)");
  }
}

double log_intensity(double intensity, double i_floor) {
  return std::log(std::max(intensity, i_floor));
}

void pixel_events(double l_prev, double l_new, std::uint64_t t0, std::uint64_t t1,
                  std::uint16_t x, std::uint16_t y, PixelState& state, const DvsConfig& cfg,
                  std::vector<Event>& out) {
  if (t1 <= t0) throw std::invalid_argument("pixel_events: t1 must be > t0");
  if (!std::isfinite(l_prev) || !std::isfinite(l_new)) {
    throw std::invalid_argument("pixel_events: non-finite log intensity");
  }

  const double dl = l_new - l_prev;
  const double span = static_cast<double>(t1 - t0);

  // Forward sweep over microsecond ticks, jumping straight to the next
  // crossing. The cursor never moves backwards, so a baseline that starts
  // far from the signal catches up at the current tick and then the sweep
  // proceeds level by level in the ramp direction.
  std::uint64_t cursor = t0 + 1;
  auto sample = [&](std::uint64_t t) {
    return t == t1 ? l_new : ramp_value(l_prev, l_new, t0, t1, t);
  };
  auto formula_time = [&](double level) {
    const double tau = span * (level - l_prev) / dl;
    return t0 + static_cast<std::uint64_t>(std::clamp(std::nearbyint(tau), 1.0, span));
  };
  auto emit = [&](bool is_on, std::uint64_t emit_t) {
    if (emit_t >= state.refractory_until) {
      out.push_back(Event{emit_t, x, y, static_cast<std::uint8_t>(is_on ? 1 : 0)});
      state.refractory_until = emit_t + cfg.refractory_us;
    }
    state.l_mem += is_on ? cfg.theta_on : -cfg.theta_off;
  };

  for (;;) {
    const double on_level = state.l_mem + cfg.theta_on;
    const double off_level = state.l_mem - cfg.theta_off;
    const double s_cur = sample(cursor);

    if (s_cur >= on_level) {
      emit(true, dl > 0.0 ? formula_time(on_level) : cursor);
      continue;
    }
    if (s_cur <= off_level) {
      emit(false, dl < 0.0 ? formula_time(off_level) : cursor);
      continue;
    }

    // Nothing fires at the cursor; jump to the next crossing in the ramp
    // direction if one still lies ahead.
    if (dl > 0.0 && l_new >= on_level) {
      const double tau = span * (on_level - l_prev) / dl;
      const auto tick = t0 + static_cast<std::uint64_t>(std::clamp(std::ceil(tau), 1.0, span));
      cursor = std::max(cursor, tick);
      emit(true, formula_time(on_level));
      continue;
    }
    if (dl < 0.0 && l_new <= off_level) {
      const double tau = span * (off_level - l_prev) / dl;
      const auto tick = t0 + static_cast<std::uint64_t>(std::clamp(std::ceil(tau), 1.0, span));
      cursor = std::max(cursor, tick);
      emit(false, formula_time(off_level));
      continue;
    }
    break;
  }
}

std::vector<std::uint32_t> hot_pixel_set(int width, int height, const DvsConfig& cfg) {
  const std::uint64_t total = static_cast<std::uint64_t>(width) * height;
  const auto count = static_cast<std::uint64_t>(
      std::llround(cfg.hot_pixel_fraction * static_cast<double>(total)));
  std::set<std::uint32_t> chosen;
  SplitMix64 rng(mix_seed(cfg.seed, kHotSelectStream));
  while (chosen.size() < count) {
    chosen.insert(static_cast<std::uint32_t>(rng.below(total)));
  }
  return {chosen.begin(), chosen.end()};
}

namespace {

void poisson_events_for_pixel(std::uint64_t seed, std::uint64_t stream, std::uint32_t pixel,
                              const PoissonSampler& sampler, std::uint64_t t_start,
                              double span_us, int width, std::uint8_t polarity,
                              std::vector<Event>& out) {
  SplitMix64 rng(mix_seed(seed, stream, pixel));
  const std::uint32_t k = sampler.draw(rng);
  const auto x = static_cast<std::uint16_t>(pixel % static_cast<std::uint32_t>(width));
  const auto y = static_cast<std::uint16_t>(pixel / static_cast<std::uint32_t>(width));
  for (std::uint32_t j = 0; j < k; ++j) {
    const auto dt = static_cast<std::uint64_t>(rng.uniform01() * span_us);
    out.push_back(Event{t_start + dt, x, y, polarity});
  }
}

}  // namespace

std::vector<Event> inject_noise(std::uint64_t t_start, std::uint64_t t_end, int width, int height,
                                const DvsConfig& cfg, int workers) {
  cfg.validate();
  std::vector<Event> out;
  if (t_end <= t_start) return out;
  const double span_us = static_cast<double>(t_end - t_start);
  const std::uint64_t total = static_cast<std::uint64_t>(width) * height;

  if (cfg.leak_rate_hz > 0.0 || cfg.shot_rate_hz > 0.0) {
    const PoissonSampler leak(cfg.leak_rate_hz * span_us * 1e-6);
    const PoissonSampler shot(cfg.shot_rate_hz / 2.0 * span_us * 1e-6);
    constexpr std::uint64_t kBlock = 1 << 16;
    const std::size_t blocks = static_cast<std::size_t>((total + kBlock - 1) / kBlock);
    std::vector<std::vector<Event>> partial(blocks);
    run_blocks(blocks, workers, [&](std::size_t b) {
      std::vector<Event>& local = partial[b];
      const std::uint64_t begin = b * kBlock;
      const std::uint64_t end = std::min(total, begin + kBlock);
      for (std::uint64_t px = begin; px < end; ++px) {
        const auto pixel = static_cast<std::uint32_t>(px);
        if (cfg.leak_rate_hz > 0.0) {
          poisson_events_for_pixel(cfg.seed, kLeakStream, pixel, leak, t_start, span_us, width,
                                   1, local);
        }
        if (cfg.shot_rate_hz > 0.0) {
          poisson_events_for_pixel(cfg.seed, kShotOnStream, pixel, shot, t_start, span_us,
                                   width, 1, local);
          poisson_events_for_pixel(cfg.seed, kShotOffStream, pixel, shot, t_start, span_us,
                                   width, 0, local);
        }
      }
    });
    for (auto& part : partial) {
      out.insert(out.end(), part.begin(), part.end());
    }
  }

  if (cfg.hot_pixel_fraction > 0.0 && cfg.hot_pixel_rate_hz > 0.0) {
    const PoissonSampler hot(cfg.hot_pixel_rate_hz * span_us * 1e-6);
    for (std::uint32_t pixel : hot_pixel_set(width, height, cfg)) {
      poisson_events_for_pixel(cfg.seed, kHotEventStream, pixel, hot, t_start, span_us, width,
                               1, out);
    }
  }
  return out;
}

namespace {

// Bucket by timestamp, then order each bucket; equal records are identical
// 16-byte values, so the result does not depend on the input permutation.
void sort_stream(std::vector<Event>& events, std::uint64_t t_first, std::uint64_t t_last) {
  if (events.size() < (1u << 16) || t_last <= t_first) {
    std::sort(events.begin(), events.end(), evio::event_less);
    return;
  }
  const std::uint64_t span = t_last - t_first + 1;
  int shift = 0;
  while ((span >> shift) > 8192) ++shift;
  const std::size_t buckets = static_cast<std::size_t>((span >> shift)) + 1;

  std::vector<std::size_t> offsets(buckets + 1, 0);
  for (const Event& e : events) {
    ++offsets[((e.t - t_first) >> shift) + 1];
  }
  for (std::size_t b = 1; b <= buckets; ++b) offsets[b] += offsets[b - 1];

  std::vector<Event> sorted(events.size());
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (const Event& e : events) {
    sorted[cursor[(e.t - t_first) >> shift]++] = e;
  }
  for (std::size_t b = 0; b < buckets; ++b) {
    std::sort(sorted.begin() + offsets[b], sorted.begin() + offsets[b + 1], evio::event_less);
  }
  events = std::move(sorted);
}

EventStream emulate_impl(render::FrameSequence& frames, const DvsConfig& cfg, int workers,
                         bool log_domain) {
  cfg.validate();
  if (frames.size() < 2) {
    throw std::invalid_argument("emulate: need at least 2 frames");
  }
  const int width = frames.width();
  const int height = frames.height();
  if (width <= 0 || height <= 0 || width > 65535 || height > 65535) {
    throw std::invalid_argument("emulate: sensor dimensions must lie in [1, 65535]");
  }
  const std::size_t npx = static_cast<std::size_t>(width) * height;

  render::LuminanceFrame prev = frames.frame(0);
  if (prev.pixels.size() != npx) {
    throw std::invalid_argument("emulate: frame 0 pixel count does not match dimensions");
  }

  std::vector<PixelState> states(npx);
  auto to_log = [&](float v) {
    return log_domain ? static_cast<double>(v) : log_intensity(v, cfg.i_floor);
  };
  for (std::size_t i = 0; i < npx; ++i) {
    states[i].l_mem = to_log(prev.pixels[i]);
  }

  constexpr int kRowBlock = 64;
  const std::size_t blocks = static_cast<std::size_t>((height + kRowBlock - 1) / kRowBlock);
  std::vector<Event> events;

  const std::uint64_t t_first = prev.timestamp_us;
  std::uint64_t t_last = t_first;

  // With spare workers the next frame decodes while the current pair is
  // being scanned; frame contents are unaffected.
  std::future<render::LuminanceFrame> prefetch;
  auto fetch = [&frames](std::size_t index) { return frames.frame(index); };
  if (workers > 1 && frames.size() > 1) {
    prefetch = std::async(std::launch::async, fetch, std::size_t{1});
  }

  for (std::size_t k = 1; k < frames.size(); ++k) {
    render::LuminanceFrame cur = prefetch.valid() ? prefetch.get() : frames.frame(k);
    if (workers > 1 && k + 1 < frames.size()) {
      prefetch = std::async(std::launch::async, fetch, k + 1);
    }
    if (cur.width != width || cur.height != height || cur.pixels.size() != npx) {
      throw std::invalid_argument("emulate: frame " + std::to_string(k) + " dimension mismatch");
    }
    if (cur.timestamp_us <= prev.timestamp_us) {
      throw std::invalid_argument("emulate: frame timestamps must be strictly increasing");
    }
    const std::uint64_t t0 = prev.timestamp_us;
    const std::uint64_t t1 = cur.timestamp_us;

    std::vector<std::vector<Event>> partial(blocks);
    run_blocks(blocks, workers, [&](std::size_t b) {
      std::vector<Event>& local = partial[b];
      const int y_begin = static_cast<int>(b) * kRowBlock;
      const int y_end = std::min(height, y_begin + kRowBlock);
      for (int y = y_begin; y < y_end; ++y) {
        const std::size_t row = static_cast<std::size_t>(y) * width;
        for (int x = 0; x < width; ++x) {
          const std::size_t i = row + x;
          const float a = prev.pixels[i];
          const float bpx = cur.pixels[i];
          // A static pixel cannot cross: after any processed pair the
          // baseline sits strictly within one threshold of the signal.
          if (a == bpx) continue;
          pixel_events(to_log(a), to_log(bpx), t0, t1, static_cast<std::uint16_t>(x),
                       static_cast<std::uint16_t>(y), states[i], cfg, local);
        }
      }
    });
    for (auto& part : partial) {
      events.insert(events.end(), part.begin(), part.end());
    }
    prev = std::move(cur);
    t_last = t1;
  }

  std::vector<Event> noise = inject_noise(t_first, t_last, width, height, cfg, workers);
  events.insert(events.end(), noise.begin(), noise.end());
  sort_stream(events, t_first, t_last);

  EventStream stream;
  stream.width = width;
  stream.height = height;
  stream.events = std::move(events);
  return stream;
}

}  // namespace

EventStream emulate(render::FrameSequence& frames, const DvsConfig& cfg, int workers) {
  return emulate_impl(frames, cfg, workers, /*log_domain=*/false);
}

EventStream emulate(const std::vector<render::LuminanceFrame>& frames, const DvsConfig& cfg,
                    int workers) {
  render::VectorFrameSequence seq(frames);
  return emulate_impl(seq, cfg, workers, /*log_domain=*/false);
}

EventStream emulate_log(const std::vector<render::LuminanceFrame>& log_frames,
                        const DvsConfig& cfg, int workers) {
  render::VectorFrameSequence seq(log_frames);
  return emulate_impl(seq, cfg, workers, /*log_domain=*/true);
}

}  // namespace ejecta::dvs
