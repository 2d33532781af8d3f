#pragma once

#include <cstdint>
#include <vector>

#include "ejecta/evio.hpp"
#include "ejecta/frame.hpp"

namespace ejecta::dvs {

using evio::Event;
using evio::EventStream;

/// Emulator parameters. Thresholds are in natural-log units.
struct DvsConfig {
  double theta_on = 0.2;
  double theta_off = 0.2;
  std::uint64_t refractory_us = 100;
  double i_floor = 1e-4;          // luminance floor before the log transform
  double leak_rate_hz = 0.1;      // per-pixel spurious ON rate
  double shot_rate_hz = 1.0;      // per-pixel balanced ON/OFF rate (total)
  double hot_pixel_fraction = 1e-5;
  double hot_pixel_rate_hz = 300.0;
  std::uint64_t seed = 0;

  DvsConfig& no_noise() {
    leak_rate_hz = 0.0;
    shot_rate_hz = 0.0;
    hot_pixel_fraction = 0.0;
    hot_pixel_rate_hz = 0.0;
    return *this;
  }

  void validate() const;
};

/// Per-pixel memory: stored log-intensity baseline and refractory deadline.
struct PixelState {
  double l_mem = 0.0;
  std::uint64_t refractory_until = 0;
};

/// ln(max(I, i_floor)).
double log_intensity(double intensity, double i_floor);

/// Log-domain signal value of the linear ramp between (t0, l_prev) and
/// (t1, l_new) sampled at tick t. Exposed so the threshold-crossing logic
/// and any reference sampling of the same model agree bit for bit.
inline double ramp_value(double l_prev, double l_new, std::uint64_t t0, std::uint64_t t1,
                         std::uint64_t t) {
  return l_prev + (l_new - l_prev) * (static_cast<double>(t - t0) / static_cast<double>(t1 - t0));
}

/// Generates the events one pixel emits while its log intensity ramps from
/// l_prev at t0 to l_new at t1. Each crossing of l_mem + theta_on
/// (l_mem - theta_off) moves l_mem to the crossed level; crossings timed
/// before state.refractory_until update l_mem but emit nothing. Emitted
/// timestamps are t0 + round(span * (level - l_prev) / (l_new - l_prev)),
/// clamped to [t0+1, t1]; a ramp that already sits beyond a level at the
/// first microsecond tick fires at t0+1.
void pixel_events(double l_prev, double l_new, std::uint64_t t0, std::uint64_t t1,
                  std::uint16_t x, std::uint16_t y, PixelState& state, const DvsConfig& cfg,
                  std::vector<Event>& out);

/// Noise events over [t_start, t_end): per-pixel Poisson leak (ON),
/// balanced shot (ON+OFF at shot_rate_hz/2 each), and a seeded subset of
/// hot pixels firing ON at hot_pixel_rate_hz. Draws are keyed on
/// (seed, stream, pixel), so output is independent of worker count.
std::vector<Event> inject_noise(std::uint64_t t_start, std::uint64_t t_end, int width, int height,
                                const DvsConfig& cfg, int workers = 1);

/// The seeded hot-pixel set (row-major indices), mainly for inspection.
std::vector<std::uint32_t> hot_pixel_set(int width, int height, const DvsConfig& cfg);

/// Full emulation: baselines initialize from the first frame (emitting
/// nothing), every consecutive frame pair runs pixel_events per pixel,
/// noise is merged in, and the result is sorted by (t, y, x, p).
EventStream emulate(render::FrameSequence& frames, const DvsConfig& cfg, int workers = 1);
EventStream emulate(const std::vector<render::LuminanceFrame>& frames, const DvsConfig& cfg,
                    int workers = 1);

/// Same pipeline but frame pixels are already log-intensity values; no
/// floor or log transform is applied.
EventStream emulate_log(const std::vector<render::LuminanceFrame>& log_frames,
                        const DvsConfig& cfg, int workers = 1);

}  // namespace ejecta::dvs
