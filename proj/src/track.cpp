#include "ejecta/track.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <unordered_map>

namespace ejecta::track {

void TrackParams::validate() const {
  if (window_us == 0) throw std::invalid_argument("track.window_us must be > 0");
  if (!(eps_px >= 1.0)) throw std::invalid_argument("track.eps_px must be >= 1");
  if (min_cluster_size < 1) throw std::invalid_argument("track.min_cluster_size must be >= 1");
  if (!(gate_px > 0.0)) throw std::invalid_argument("track.gate_px must be > 0");
  if (confirm_hits < 1) throw std::invalid_argument("track.confirm_hits must be >= 1");
  if (max_misses < 0) throw std::invalid_argument("track.max_misses must be >= 0");
  if (denoise_min_neighbors < 0 || denoise_radius_px < 0) {
    throw std::invalid_argument("track.denoise parameters must be >= 0");
  }
  if (velocity_fit_count < 2) throw std::invalid_argument("track.velocity_fit_count must be >= 2");
}

EventStream denoise(const EventStream& stream, int radius_px, std::uint64_t window_us,
                    int min_neighbors) {
  EventStream out;
  out.width = stream.width;
  out.height = stream.height;
  if (min_neighbors <= 0) {
    out.events = stream.events;
    return out;
  }

  // Rolling count grid over the trailing window; the deque holds the events
  // currently inside it.
  const std::size_t npx = static_cast<std::size_t>(stream.width) * stream.height;
  std::vector<std::uint32_t> grid(npx, 0);
  std::deque<Event> recent;

  out.events.reserve(stream.events.size());
  for (const Event& e : stream.events) {
    while (!recent.empty() && recent.front().t + window_us < e.t) {
      const Event& old = recent.front();
      --grid[static_cast<std::size_t>(old.y) * stream.width + old.x];
      recent.pop_front();
    }
    int count = 0;
    const int x_lo = std::max(0, e.x - radius_px);
    const int x_hi = std::min(stream.width - 1, e.x + radius_px);
    const int y_lo = std::max(0, e.y - radius_px);
    const int y_hi = std::min(stream.height - 1, e.y + radius_px);
    for (int y = y_lo; y <= y_hi && count < min_neighbors; ++y) {
      const std::size_t row = static_cast<std::size_t>(y) * stream.width;
      for (int x = x_lo; x <= x_hi; ++x) {
        if (x == e.x && y == e.y) continue;  // support must come from other pixels
        count += grid[row + x];
        if (count >= min_neighbors) break;
      }
    }
    if (count >= min_neighbors) out.events.push_back(e);
    ++grid[static_cast<std::size_t>(e.y) * stream.width + e.x];
    recent.push_back(e);
  }
  return out;
}

namespace {

struct DisjointSet {
  std::vector<std::int32_t> parent;

  explicit DisjointSet(std::size_t n) : parent(n) {
    for (std::size_t i = 0; i < n; ++i) parent[i] = static_cast<std::int32_t>(i);
  }
  std::int32_t find(std::int32_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  void unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

std::vector<Detection> cluster_window(std::span<const Event> events, std::uint64_t t_center,
                                      double eps_px, int min_cluster_size, int width, int height,
                                      const std::vector<std::uint8_t>* mask) {
  if (!(eps_px >= 1.0)) throw std::invalid_argument("cluster_window: eps_px must be >= 1");

  // Collapse events onto their pixels; connectivity depends only on the
  // occupied-pixel set, so the result is order independent.
  std::unordered_map<std::uint32_t, std::int32_t> pixel_ids;
  std::vector<std::uint32_t> pixels;
  std::vector<std::int32_t> event_pixel(events.size(), -1);
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    const std::uint32_t key = static_cast<std::uint32_t>(e.y) * width + e.x;
    if (mask != nullptr && (*mask)[key]) continue;
    auto [it, inserted] = pixel_ids.try_emplace(key, static_cast<std::int32_t>(pixels.size()));
    if (inserted) pixels.push_back(key);
    event_pixel[i] = it->second;
  }

  const int r = static_cast<int>(std::floor(eps_px));
  const double eps2 = eps_px * eps_px;
  DisjointSet ds(pixels.size());
  for (std::size_t pi = 0; pi < pixels.size(); ++pi) {
    const int x = static_cast<int>(pixels[pi] % width);
    const int y = static_cast<int>(pixels[pi] / width);
    for (int dy = 0; dy <= r; ++dy) {
      for (int dx = (dy == 0 ? 1 : -r); dx <= r; ++dx) {
        if (dx * dx + dy * dy > eps2) continue;
        const int nx = x + dx;
        const int ny = y + dy;
        if (nx < 0 || nx >= width || ny < 0 || ny >= height) continue;
        const auto it = pixel_ids.find(static_cast<std::uint32_t>(ny) * width + nx);
        if (it != pixel_ids.end()) ds.unite(static_cast<std::int32_t>(pi), it->second);
      }
    }
  }

  struct Accum {
    double sum_u = 0.0, sum_v = 0.0;
    int count = 0;
    int min_x = 1 << 30, min_y = 1 << 30, max_x = -1, max_y = -1;
  };
  std::unordered_map<std::int32_t, Accum> clusters;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (event_pixel[i] < 0) continue;
    Accum& a = clusters[ds.find(event_pixel[i])];
    const Event& e = events[i];
    a.sum_u += e.x;
    a.sum_v += e.y;
    ++a.count;
    a.min_x = std::min(a.min_x, int(e.x));
    a.min_y = std::min(a.min_y, int(e.y));
    a.max_x = std::max(a.max_x, int(e.x));
    a.max_y = std::max(a.max_y, int(e.y));
  }

  std::vector<Detection> detections;
  for (const auto& [root, a] : clusters) {
    if (a.count < min_cluster_size) continue;
    Detection d;
    d.t = t_center;
    d.u = a.sum_u / a.count;
    d.v = a.sum_v / a.count;
    d.event_count = a.count;
    d.min_x = a.min_x;
    d.min_y = a.min_y;
    d.max_x = a.max_x;
    d.max_y = a.max_y;
    detections.push_back(d);
  }
  std::sort(detections.begin(), detections.end(), [](const Detection& a, const Detection& b) {
    if (a.u != b.u) return a.u < b.u;
    if (a.v != b.v) return a.v < b.v;
    return a.event_count < b.event_count;
  });
  return detections;
}

namespace {

// Least-squares constant-velocity fit over the trailing detections;
// position anchors at the newest detection.
void refit_state(Track& track, int fit_count) {
  const auto& det = track.detections;
  const Detection& last = det.back();
  track.u = last.u;
  track.v = last.v;
  const std::size_t n = std::min<std::size_t>(det.size(), static_cast<std::size_t>(fit_count));
  if (n < 2) {
    track.du_dt = 0.0;
    track.dv_dt = 0.0;
    return;
  }
  const std::size_t begin = det.size() - n;
  double mean_t = 0.0, mean_u = 0.0, mean_v = 0.0;
  for (std::size_t i = begin; i < det.size(); ++i) {
    mean_t += static_cast<double>(det[i].t) * 1e-6;
    mean_u += det[i].u;
    mean_v += det[i].v;
  }
  mean_t /= n;
  mean_u /= n;
  mean_v /= n;
  double stt = 0.0, stu = 0.0, stv = 0.0;
  for (std::size_t i = begin; i < det.size(); ++i) {
    const double dt = static_cast<double>(det[i].t) * 1e-6 - mean_t;
    stt += dt * dt;
    stu += dt * (det[i].u - mean_u);
    stv += dt * (det[i].v - mean_v);
  }
  if (stt > 0.0) {
    track.du_dt = stu / stt;
    track.dv_dt = stv / stt;
  }
}

}  // namespace

void associate(std::vector<Track>& tracks, const std::vector<Detection>& detections,
               double gate_px, const TrackParams& params, int& next_track_id) {
  if (!(gate_px > 0.0)) throw std::invalid_argument("associate: gate_px must be > 0");

  struct Candidate {
    double dist;
    std::size_t track;
    std::size_t detection;
  };
  std::vector<Candidate> candidates;
  std::vector<std::pair<double, double>> predicted(tracks.size());
  for (std::size_t ti = 0; ti < tracks.size(); ++ti) {
    Track& tr = tracks[ti];
    if (tr.status == TrackStatus::Terminated) continue;
    double pu = tr.u;
    double pv = tr.v;
    if (!tr.detections.empty() && !detections.empty()) {
      const double dt_s =
          (static_cast<double>(detections.front().t) - static_cast<double>(tr.detections.back().t)) *
          1e-6;
      pu += tr.du_dt * dt_s;
      pv += tr.dv_dt * dt_s;
    }
    predicted[ti] = {pu, pv};
    for (std::size_t di = 0; di < detections.size(); ++di) {
      const double dx = detections[di].u - pu;
      const double dy = detections[di].v - pv;
      const double dist = std::hypot(dx, dy);
      if (dist <= gate_px) candidates.push_back({dist, ti, di});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    if (a.track != b.track) return a.track < b.track;
    return a.detection < b.detection;
  });

  std::vector<bool> track_matched(tracks.size(), false);
  std::vector<bool> det_matched(detections.size(), false);
  for (const Candidate& c : candidates) {
    if (track_matched[c.track] || det_matched[c.detection]) continue;
    track_matched[c.track] = true;
    det_matched[c.detection] = true;
    Track& tr = tracks[c.track];
    tr.detections.push_back(detections[c.detection]);
    tr.misses = 0;
    refit_state(tr, params.velocity_fit_count);
    if (tr.status == TrackStatus::Tentative &&
        static_cast<int>(tr.detections.size()) >= params.confirm_hits) {
      tr.status = TrackStatus::Confirmed;
      tr.ever_confirmed = true;
    }
  }

  for (std::size_t ti = 0; ti < tracks.size(); ++ti) {
    Track& tr = tracks[ti];
    if (tr.status == TrackStatus::Terminated || track_matched[ti]) continue;
    if (++tr.misses > params.max_misses) tr.status = TrackStatus::Terminated;
  }

  for (std::size_t di = 0; di < detections.size(); ++di) {
    if (det_matched[di]) continue;
    Track tr;
    tr.id = next_track_id++;
    tr.detections.push_back(detections[di]);
    tr.u = detections[di].u;
    tr.v = detections[di].v;
    tr.status = TrackStatus::Tentative;
    if (params.confirm_hits <= 1) {
      tr.status = TrackStatus::Confirmed;
      tr.ever_confirmed = true;
    }
    tracks.push_back(std::move(tr));
  }
}

std::vector<Track> track_stream(const EventStream& stream, const TrackParams& params,
                                const std::vector<std::uint8_t>* mask) {
  params.validate();
  std::vector<Track> tracks;
  int next_id = 0;
  if (stream.events.empty()) return {};

  const std::uint64_t t_max = stream.events.back().t;
  const std::uint64_t n_windows = t_max / params.window_us + 1;
  std::size_t cursor = 0;
  for (std::uint64_t w = 0; w < n_windows; ++w) {
    const std::uint64_t t_start = w * params.window_us;
    const std::uint64_t t_end = t_start + params.window_us;
    const std::size_t begin = cursor;
    while (cursor < stream.events.size() && stream.events[cursor].t < t_end) ++cursor;

    EventStream window;
    window.width = stream.width;
    window.height = stream.height;
    window.events.assign(stream.events.begin() + begin, stream.events.begin() + cursor);
    const EventStream cleaned = denoise(window, params.denoise_radius_px,
                                        params.denoise_window_us, params.denoise_min_neighbors);
    const std::vector<Detection> detections =
        cluster_window(cleaned.events, t_start + params.window_us / 2, params.eps_px,
                       params.min_cluster_size, stream.width, stream.height, mask);
    associate(tracks, detections, params.gate_px, params, next_id);
  }

  std::vector<Track> confirmed;
  for (Track& tr : tracks) {
    if (tr.ever_confirmed) confirmed.push_back(std::move(tr));
  }
  std::sort(confirmed.begin(), confirmed.end(),
            [](const Track& a, const Track& b) { return a.id < b.id; });
  return confirmed;
}

}  // namespace ejecta::track
