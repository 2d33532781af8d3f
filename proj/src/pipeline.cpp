#include "ejecta/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "ejecta/image_io.hpp"
#include "ejecta/parallel.hpp"
#include "ejecta/render.hpp"

namespace ejecta::cli {

namespace fs = std::filesystem;

void write_truth_csv(const fs::path& path, const std::vector<TruthRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "frame,particle_id,u,v,visible\n";
  char buf[128];
  for (const TruthRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.3f,%.3f,%d\n", r.frame, r.particle_id, r.u, r.v,
                  r.visible ? 1 : 0);
    out << buf;
  }
}

std::vector<TruthRow> read_truth_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<TruthRow> rows;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    if (line_number == 1) {
      if (line.rfind("frame,", 0) != 0) {
        throw std::runtime_error(path.string() + ": missing truth header");
      }
      continue;
    }
    TruthRow r;
    int visible = 0;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%d", &r.frame, &r.particle_id, &r.u, &r.v,
                    &visible) != 5) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_number) +
                               ": malformed truth row");
    }
    r.visible = visible != 0;
    rows.push_back(r);
  }
  return rows;
}

void write_tracks_csv(const fs::path& path, const std::vector<track::Track>& tracks) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "track_id,t_us,u,v,event_count,status\n";
  char buf[160];
  for (const track::Track& tr : tracks) {
    const char* status = tr.status == track::TrackStatus::Terminated ? "terminated" : "confirmed";
    for (const track::Detection& d : tr.detections) {
      std::snprintf(buf, sizeof(buf), "%d,%llu,%.3f,%.3f,%d,%s\n", tr.id,
                    static_cast<unsigned long long>(d.t), d.u, d.v, d.event_count, status);
      out << buf;
    }
  }
}

std::vector<TrackRow> read_tracks_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<TrackRow> rows;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    if (line_number == 1) {
      if (line.rfind("track_id,", 0) != 0) {
        throw std::runtime_error(path.string() + ": missing tracks header");
      }
      continue;
    }
    TrackRow r;
    unsigned long long t = 0;
    char status[32] = {0};
    if (std::sscanf(line.c_str(), "%d,%llu,%lf,%lf,%d,%31s", &r.track_id, &t, &r.u, &r.v,
                    &r.event_count, status) != 6) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_number) +
                               ": malformed track row");
    }
    r.t_us = t;
    r.status = status;
    rows.push_back(r);
  }
  return rows;
}

SimulateResult cmd_simulate(const scene::ScenarioConfig& config, const fs::path& out_dir,
                            int workers) {
  config.validate();
  fs::create_directories(out_dir);

  render::SceneRenderer renderer(config);
  const scene::CameraModel camera = renderer.camera();
  const scene::CameraFrame& cam_frame = renderer.camera_frame();

  // propagation is sequential; rasterization of the snapshots is not
  std::vector<std::vector<scene::ParticleState>> snapshots;
  snapshots.reserve(static_cast<std::size_t>(config.frame_count));
  for (int k = 0; k < config.frame_count; ++k) {
    if (k > 0) renderer.step();
    snapshots.push_back(renderer.particles());
  }

  std::ofstream manifest(out_dir / render::kManifestName);
  if (!manifest) throw std::runtime_error("cannot write manifest in " + out_dir.string());

  char name[32];
  const int chunk = std::max(1, workers);
  std::vector<render::LuminanceFrame> rendered(static_cast<std::size_t>(chunk));
  for (int base = 0; base < config.frame_count; base += chunk) {
    const int count = std::min(chunk, config.frame_count - base);
    run_blocks(static_cast<std::size_t>(count), workers, [&](std::size_t i) {
      rendered[i] = renderer.render_at(base + static_cast<int>(i),
                                       snapshots[static_cast<std::size_t>(base) + i]);
    });
    for (int i = 0; i < count; ++i) {
      std::snprintf(name, sizeof(name), "frame_%05d.pgm", base + i);
      render::write_pgm16(out_dir / name, rendered[static_cast<std::size_t>(i)]);
      manifest << name << " " << rendered[static_cast<std::size_t>(i)].timestamp_us << "\n";
    }
  }

  std::vector<TruthRow> truth;
  for (int k = 0; k < config.frame_count; ++k) {
    const auto& particles = snapshots[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < particles.size(); ++i) {
      TruthRow row;
      row.frame = k;
      row.particle_id = static_cast<int>(i);
      const scene::ParticleState& p = particles[i];
      if (p.alive) {
        if (const auto proj = scene::project(p.position, camera, cam_frame)) {
          row.u = proj->u;
          row.v = proj->v;
          const Vec3 to_particle = p.position - cam_frame.origin;
          const double range = norm(to_particle);
          const auto hit =
              scene::ray_sphere(cam_frame.origin, to_particle / range, {0, 0, 0},
                                config.asteroid_radius);
          const bool occluded = hit && *hit < range;
          row.visible = !occluded && proj->u >= 0.0 && proj->u <= camera.width - 1 &&
                        proj->v >= 0.0 && proj->v <= camera.height - 1;
        }
      }
      truth.push_back(row);
    }
  }
  write_truth_csv(out_dir / "truth.csv", truth);
  return {config.frame_count, static_cast<int>(config.particles.size())};
}

EmulateResult cmd_emulate(const fs::path& frame_dir, const dvs::DvsConfig& cfg,
                          const fs::path& out_file, int workers) {
  render::DirFrameSequence frames(frame_dir);
  const auto start = std::chrono::steady_clock::now();
  const evio::EventStream stream = dvs::emulate(frames, cfg, workers);
  const auto stop = std::chrono::steady_clock::now();

  evio::write_evt1_file(out_file, stream);

  EmulateResult result;
  result.events = stream.events.size();
  for (const evio::Event& e : stream.events) {
    if (e.p) {
      ++result.on_events;
    } else {
      ++result.off_events;
    }
  }
  result.wall_seconds = std::chrono::duration<double>(stop - start).count();
  result.events_per_second =
      result.wall_seconds > 0.0 ? static_cast<double>(result.events) / result.wall_seconds : 0.0;
  return result;
}

int cmd_accumulate(const fs::path& events_file, const fs::path& out_dir, std::uint64_t window_us,
                   std::uint64_t t0) {
  const evio::EventStream stream = evio::read_evt1_file(events_file);
  const std::vector<evio::EventFrame> frames = evio::accumulate(stream, window_us, t0);
  fs::create_directories(out_dir);
  char name[40];
  for (std::size_t i = 0; i < frames.size(); ++i) {
    std::snprintf(name, sizeof(name), "eventframe_%05zu.pgm", i);
    render::write_pgm8(out_dir / name, frames[i].width, frames[i].height,
                       evio::render_event_frame(frames[i]));
  }
  return static_cast<int>(frames.size());
}

namespace {

void draw_crosshair(std::vector<std::uint8_t>& img, int width, int height, double u, double v) {
  const int cx = static_cast<int>(std::lround(u));
  const int cy = static_cast<int>(std::lround(v));
  for (int d = -4; d <= 4; ++d) {
    if (std::abs(d) < 2) continue;  // leave the centroid itself visible
    const int x = cx + d;
    const int y = cy + d;
    if (x >= 0 && x < width && cy >= 0 && cy < height) {
      img[static_cast<std::size_t>(cy) * width + x] = 255;
    }
    if (cx >= 0 && cx < width && y >= 0 && y < height) {
      img[static_cast<std::size_t>(y) * width + cx] = 255;
    }
  }
}

}  // namespace

TrackCmdResult cmd_track(const fs::path& events_file, const fs::path& out_csv,
                         const track::TrackParams& params,
                         const scene::ScenarioConfig* mask_scenario,
                         const fs::path* overlay_dir) {
  const evio::EventStream stream = evio::read_evt1_file(events_file);

  std::vector<std::uint8_t> mask;
  const std::vector<std::uint8_t>* mask_ptr = nullptr;
  if (mask_scenario != nullptr) {
    const scene::CameraModel camera = mask_scenario->camera();
    if (camera.width != stream.width || camera.height != stream.height) {
      throw std::runtime_error("mask scenario camera does not match the event stream dimensions");
    }
    const scene::CameraFrame frame(mask_scenario->camera_position,
                                   mask_scenario->camera_pointing, mask_scenario->camera_up);
    mask = scene::silhouette_mask(camera, frame, mask_scenario->asteroid_radius, 3);
    mask_ptr = &mask;
  }

  const std::vector<track::Track> tracks = track::track_stream(stream, params, mask_ptr);
  write_tracks_csv(out_csv, tracks);

  if (overlay_dir != nullptr) {
    fs::create_directories(*overlay_dir);
    const std::vector<evio::EventFrame> frames = evio::accumulate(stream, params.window_us, 0);
    std::vector<std::vector<std::pair<double, double>>> centroids(frames.size());
    for (const track::Track& tr : tracks) {
      for (const track::Detection& d : tr.detections) {
        const std::size_t w = d.t / params.window_us;
        if (w < centroids.size()) centroids[w].push_back({d.u, d.v});
      }
    }
    char name[40];
    for (std::size_t i = 0; i < frames.size(); ++i) {
      std::vector<std::uint8_t> img = evio::render_event_frame(frames[i]);
      for (const auto& [u, v] : centroids[i]) {
        draw_crosshair(img, frames[i].width, frames[i].height, u, v);
      }
      std::snprintf(name, sizeof(name), "overlay_%05zu.pgm", i);
      render::write_pgm8(*overlay_dir / name, frames[i].width, frames[i].height, img);
    }
  }

  int confirmed = 0;
  for (const track::Track& tr : tracks) {
    if (tr.ever_confirmed) ++confirmed;
  }
  return {confirmed};
}

scene::ScenarioConfig single_particle_scenario() {
  scene::ScenarioConfig cfg;
  cfg.camera_width = 320;
  cfg.camera_height = 240;
  cfg.camera_hfov_rad = deg_to_rad(40.0);
  cfg.camera_position = {0.0, -400.0, 0.0};
  cfg.camera_pointing = {0.0, 1.0, 0.0};
  cfg.camera_up = {0.0, 0.0, 1.0};
  cfg.sun_direction = normalized(Vec3{0.4, -0.8, 0.45});
  cfg.mu = 4.892;
  cfg.asteroid_radius = 5.0;
  cfg.frame_count = 30;
  cfg.frame_rate = 30.0;
  cfg.sim_dt_s = 3.0;
  cfg.seed = 7;
  // path stays clear of the asteroid disk at the frame centre
  cfg.particles.push_back({{-30.0, -100.0, -35.0}, {1.0, 0.0, 0.5}, 0.05});
  cfg.dvs.seed = cfg.seed;
  return cfg;
}

int cmd_fixture(const std::string& name, const fs::path& out_dir, const FixtureParams& params) {
  if (name == "spinning_dot") {
    const int count = params.frame_count > 0 ? params.frame_count : 121;
    const double rate = params.frame_rate > 0.0 ? params.frame_rate : 120.0;
    render::write_frame_dir(out_dir,
                            render::spinning_dot_sequence(params.radius_px, params.period_s,
                                                          rate, count, params.width,
                                                          params.height));
    return count;
  }
  if (name == "static") {
    scene::ScenarioConfig cfg;
    cfg.camera_width = params.width > 0 ? params.width : 300;
    cfg.camera_height = params.height > 0 ? params.height : 200;
    cfg.camera_hfov_rad = deg_to_rad(60.0);
    cfg.camera_position = {0.0, -150.0, 0.0};
    cfg.camera_pointing = {0.0, 1.0, 0.0};
    cfg.sun_direction = normalized(Vec3{0.5, -0.6, 0.3});
    cfg.asteroid_radius = 40.0;
    cfg.frame_count = params.frame_count > 0 ? std::max(2, params.frame_count) : 4;
    cfg.frame_rate = params.frame_rate > 0.0 ? params.frame_rate : 30.0;
    cfg.sim_dt_s = 1.0 / cfg.frame_rate;
    render::write_frame_dir(out_dir, render::render_sequence(cfg));
    return cfg.frame_count;
  }
  if (name == "single_particle") {
    scene::ScenarioConfig cfg = single_particle_scenario();
    if (params.width > 0) cfg.camera_width = params.width;
    if (params.height > 0) cfg.camera_height = params.height;
    if (params.frame_count > 0) cfg.frame_count = params.frame_count;
    if (params.frame_rate > 0.0) cfg.frame_rate = params.frame_rate;
    cmd_simulate(cfg, out_dir);
    return cfg.frame_count;
  }
  throw std::runtime_error("unknown fixture '" + name +
                           "' (expected spinning_dot, static, or single_particle)");
}

namespace {

struct TruthTrace {
  std::vector<std::uint64_t> t;
  std::vector<double> u;
  std::vector<double> v;

  // Linear interpolation; nullopt outside the visible span.
  std::optional<std::pair<double, double>> sample(std::uint64_t when) const {
    if (t.empty() || when < t.front() || when > t.back()) return std::nullopt;
    const auto it = std::lower_bound(t.begin(), t.end(), when);
    const std::size_t hi = static_cast<std::size_t>(it - t.begin());
    if (t[hi] == when) return std::make_pair(u[hi], v[hi]);
    const std::size_t lo = hi - 1;
    const double f = static_cast<double>(when - t[lo]) / static_cast<double>(t[hi] - t[lo]);
    return std::make_pair(u[lo] + f * (u[hi] - u[lo]), v[lo] + f * (v[hi] - v[lo]));
  }
};

}  // namespace

EvalResult evaluate_tracks(const std::vector<track::Track>& tracks,
                           const std::vector<TruthRow>& truth, double frame_rate_hz,
                           double match_px) {
  std::map<int, TruthTrace> traces;
  int max_particle = -1;
  for (const TruthRow& row : truth) {
    max_particle = std::max(max_particle, row.particle_id);
    if (!row.visible) continue;
    TruthTrace& tr = traces[row.particle_id];
    tr.t.push_back(static_cast<std::uint64_t>(std::llround(row.frame * 1e6 / frame_rate_hz)));
    tr.u.push_back(row.u);
    tr.v.push_back(row.v);
  }

  EvalResult result;
  result.truth_particles = max_particle + 1;
  result.confirmed_tracks = static_cast<int>(tracks.size());

  std::map<int, bool> recovered;
  double error_sum = 0.0;
  int matched_tracks = 0;
  for (const track::Track& tr : tracks) {
    double best_mean = std::numeric_limits<double>::infinity();
    int best_particle = -1;
    for (const auto& [pid, trace] : traces) {
      double sum = 0.0;
      int n = 0;
      for (const track::Detection& d : tr.detections) {
        const auto p = trace.sample(d.t);
        if (!p) continue;
        sum += std::hypot(d.u - p->first, d.v - p->second);
        ++n;
      }
      if (static_cast<std::size_t>(n) < std::min<std::size_t>(3, tr.detections.size())) continue;
      const double mean = sum / n;
      if (mean < best_mean) {
        best_mean = mean;
        best_particle = pid;
      }
    }
    if (best_particle >= 0 && best_mean < match_px) {
      recovered[best_particle] = true;
      error_sum += best_mean;
      ++matched_tracks;
    } else {
      ++result.false_tracks;
    }
  }
  result.recovered = static_cast<int>(recovered.size());
  result.mean_error_px = matched_tracks > 0 ? error_sum / matched_tracks : 0.0;
  return result;
}

PipelineResult run_pipeline(const PipelineRun& run) {
  static const std::vector<std::string> order = {"simulate", "emulate", "accumulate", "track",
                                                 "eval"};
  std::vector<std::string> stages = run.stages.empty() ? order : run.stages;
  for (const std::string& stage : stages) {
    if (std::find(order.begin(), order.end(), stage) == order.end()) {
      throw std::runtime_error("unknown pipeline stage '" + stage + "'");
    }
  }
  auto wants = [&](const std::string& stage) {
    return std::find(stages.begin(), stages.end(), stage) != stages.end();
  };

  ConfigTree tree = ConfigTree::parse_file(run.config_path);
  if (run.seed_override) tree.set("seed", std::to_string(*run.seed_override));
  const scene::ScenarioConfig config = scenario_from_config(tree);
  const track::TrackParams params = track_params_from_config(tree);

  const fs::path frames = run.output_dir / "frames";
  const fs::path events = run.output_dir / "events.evt1";
  const fs::path bins = run.output_dir / "eventframes";
  const fs::path tracks = run.output_dir / "tracks.csv";
  fs::create_directories(run.output_dir);

  PipelineResult result;
  // the order vector is the dependency order; requested stages run in it
  for (const std::string& stage : order) {
    if (!wants(stage)) continue;
    if (stage == "simulate") {
      result.simulate = cmd_simulate(config, frames, run.workers);
    } else if (stage == "emulate") {
      result.emulate = cmd_emulate(frames, config.dvs, events, run.workers);
    } else if (stage == "accumulate") {
      result.event_frames = cmd_accumulate(
          events, bins, static_cast<std::uint64_t>(std::llround(1e6 / config.frame_rate)));
    } else if (stage == "track") {
      result.track = cmd_track(events, tracks, params, &config);
    } else if (stage == "eval") {
      result.eval = cmd_eval(tracks, frames / "truth.csv", config.frame_rate);
    }
  }
  return result;
}

EvalResult cmd_eval(const fs::path& tracks_csv, const fs::path& truth_csv, double frame_rate_hz,
                    double match_px) {
  const std::vector<TrackRow> rows = read_tracks_csv(tracks_csv);
  std::map<int, track::Track> by_id;
  for (const TrackRow& r : rows) {
    track::Track& tr = by_id[r.track_id];
    tr.id = r.track_id;
    tr.ever_confirmed = true;
    track::Detection d;
    d.t = r.t_us;
    d.u = r.u;
    d.v = r.v;
    d.event_count = r.event_count;
    tr.detections.push_back(d);
  }
  std::vector<track::Track> tracks;
  tracks.reserve(by_id.size());
  for (auto& [id, tr] : by_id) tracks.push_back(std::move(tr));
  return evaluate_tracks(tracks, read_truth_csv(truth_csv), frame_rate_hz, match_px);
}

}  // namespace ejecta::cli
