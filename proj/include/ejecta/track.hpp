#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ejecta/evio.hpp"

namespace ejecta::track {

using evio::Event;
using evio::EventStream;

struct Detection {
  std::uint64_t t = 0;  // window centre, microseconds
  double u = 0.0;
  double v = 0.0;
  int event_count = 0;
  int min_x = 0, min_y = 0, max_x = 0, max_y = 0;
};

enum class TrackStatus { Tentative, Confirmed, Terminated };

struct Track {
  int id = 0;
  std::vector<Detection> detections;
  // constant-velocity state; position refers to the last detection time
  double u = 0.0, v = 0.0;
  double du_dt = 0.0, dv_dt = 0.0;  // px per second
  int misses = 0;
  TrackStatus status = TrackStatus::Tentative;
  bool ever_confirmed = false;
};

struct TrackParams {
  std::uint64_t window_us = 33333;
  double eps_px = 3.0;
  int min_cluster_size = 5;
  double gate_px = 10.0;
  int confirm_hits = 3;
  int max_misses = 3;
  int denoise_min_neighbors = 2;
  int denoise_radius_px = 2;
  std::uint64_t denoise_window_us = 10000;
  int velocity_fit_count = 5;  // detections used for the least-squares velocity

  void validate() const;
};

/// Causal background-activity filter: an event survives iff at least
/// min_neighbors earlier-in-stream events from *other* pixels lie within
/// Chebyshev distance radius_px and the trailing window_us. Order
/// preserving; min_neighbors = 0 is the identity.
EventStream denoise(const EventStream& stream, int radius_px, std::uint64_t window_us,
                    int min_neighbors);

/// Density-connected clustering on (x, y): events chain-linked by hops of
/// Euclidean length <= eps_px form one cluster; clusters smaller than
/// min_cluster_size are dropped. mask (row-major width*height, 1 = exclude)
/// removes on-body events first. Detections carry t = t_center and are
/// sorted by (u, v, count).
std::vector<Detection> cluster_window(std::span<const Event> events, std::uint64_t t_center,
                                      double eps_px, int min_cluster_size, int width, int height,
                                      const std::vector<std::uint8_t>* mask = nullptr);

/// Gated globally-nearest-neighbor association step. Tracks predict with
/// constant velocity to the detections' window centre; pairs beyond gate_px
/// never match. Matched tracks refit velocity over the trailing detections,
/// unmatched detections spawn tentative tracks, and tracks exceeding
/// max_misses terminate.
void associate(std::vector<Track>& tracks, const std::vector<Detection>& detections,
               double gate_px, const TrackParams& params, int& next_track_id);

/// Single pass over the stream in consecutive windows of window_us
/// (aligned at t = 0): denoise -> cluster -> associate. Returns every track
/// that ever confirmed, detection histories intact, ordered by id.
std::vector<Track> track_stream(const EventStream& stream, const TrackParams& params,
                                const std::vector<std::uint8_t>* mask = nullptr);

}  // namespace ejecta::track
