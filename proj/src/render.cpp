#include "ejecta/render.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ejecta::render {

LuminanceFrame shade_asteroid(const scene::CameraModel& camera, const scene::CameraFrame& frame,
                              double asteroid_radius, const Vec3& sun_direction, double albedo,
                              double background) {
  LuminanceFrame out = make_frame(camera.width, camera.height, static_cast<float>(background));
  const Vec3 center{0.0, 0.0, 0.0};
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      const Vec3 dir =
          normalized(frame.forward + frame.right * ((x - camera.cx) / camera.focal_px) +
                     frame.down * ((y - camera.cy) / camera.focal_px));
      const auto hit = scene::ray_sphere(frame.origin, dir, center, asteroid_radius);
      if (!hit) continue;
      const Vec3 n = normalized(frame.origin + dir * (*hit) - center);
      const double lum = background + albedo * std::max(0.0, dot(n, sun_direction));
      out.at(x, y) = static_cast<float>(lum);
    }
  }
  return out;
}

void splat_particle(LuminanceFrame& frame, const scene::ParticleState& particle,
                    const scene::CameraModel& camera, const scene::CameraFrame& cam_frame,
                    const Vec3& sun_direction, double asteroid_radius,
                    const scene::RenderParams& params) {
  if (!particle.alive) return;
  const auto proj = scene::project(particle.position, camera, cam_frame);
  if (!proj) return;

  const Vec3 to_camera = cam_frame.origin - particle.position;
  const double range = norm(to_camera);
  if (asteroid_radius > 0.0) {
    const auto hit =
        scene::ray_sphere(cam_frame.origin, to_camera * (-1.0 / range), {0, 0, 0}, asteroid_radius);
    if (hit && *hit < range) return;  // body occludes the particle
  }

  const double sigma =
      std::max(params.psf_sigma_px, scene::angular_radius_px(particle.diameter, range, camera));
  const double phase_cos = dot(to_camera / range, sun_direction);
  const double amplitude = params.particle_albedo * std::max(0.0, 0.5 * (1.0 + phase_cos));
  if (amplitude <= 0.0) return;

  const double support = 6.0 * sigma;
  const int x_lo = std::max(0, static_cast<int>(std::ceil(proj->u - support)));
  const int x_hi = std::min(camera.width - 1, static_cast<int>(std::floor(proj->u + support)));
  const int y_lo = std::max(0, static_cast<int>(std::ceil(proj->v - support)));
  const int y_hi = std::min(camera.height - 1, static_cast<int>(std::floor(proj->v + support)));
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
  for (int y = y_lo; y <= y_hi; ++y) {
    for (int x = x_lo; x <= x_hi; ++x) {
      const double dx = x - proj->u;
      const double dy = y - proj->v;
      const double r2 = dx * dx + dy * dy;
      if (r2 > support * support) continue;
      frame.at(x, y) += static_cast<float>(amplitude * std::exp(-r2 * inv_two_sigma2));
    }
  }
}

SceneRenderer::SceneRenderer(const scene::ScenarioConfig& config)
    : config_(config),
      camera_(config.camera()),
      frame_(config.camera_position, config.camera_pointing, config.camera_up),
      base_(shade_asteroid(camera_, frame_, config.asteroid_radius, config.sun_direction,
                           config.render.asteroid_albedo, config.render.background)) {
  particles_.reserve(config.particles.size());
  for (const scene::ParticleInit& init : config.particles) {
    particles_.push_back({init.position, init.velocity, init.diameter, true});
  }
}

std::uint64_t SceneRenderer::timestamp_us(int frame_index) const {
  return static_cast<std::uint64_t>(std::llround(frame_index * 1e6 / config_.frame_rate));
}

LuminanceFrame SceneRenderer::render_current(int frame_index) const {
  return render_at(frame_index, particles_);
}

LuminanceFrame SceneRenderer::render_at(int frame_index,
                                        const std::vector<scene::ParticleState>& particles) const {
  LuminanceFrame out = base_;
  out.timestamp_us = timestamp_us(frame_index);
  for (const scene::ParticleState& p : particles) {
    splat_particle(out, p, camera_, frame_, config_.sun_direction, config_.asteroid_radius,
                   config_.render);
  }
  for (float& v : out.pixels) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

void SceneRenderer::step() {
  constexpr int kSubsteps = 10;
  const double dt = config_.sim_dt_s / kSubsteps;
  for (scene::ParticleState& p : particles_) {
    for (int s = 0; s < kSubsteps && p.alive; ++s) {
      p = scene::propagate(p, config_.mu, dt, config_.asteroid_radius);
    }
  }
}

std::vector<LuminanceFrame> render_sequence(const scene::ScenarioConfig& config) {
  config.validate();
  SceneRenderer renderer(config);
  std::vector<LuminanceFrame> frames;
  frames.reserve(static_cast<std::size_t>(config.frame_count));
  for (int k = 0; k < config.frame_count; ++k) {
    if (k > 0) renderer.step();
    frames.push_back(renderer.render_current(k));
  }
  return frames;
}

namespace {

// 0 below lo, 1 above hi, smooth ramp in between.
double smoothstep(double lo, double hi, double v) {
  const double t = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

}  // namespace

std::vector<LuminanceFrame> spinning_dot_sequence(double radius_px, double period_s,
                                                  double frame_rate, int frame_count, int width,
                                                  int height) {
  if (!(radius_px > 0.0) || !(period_s > 0.0) || !(frame_rate > 0.0) || frame_count <= 0) {
    throw std::invalid_argument("spinning_dot_sequence: all parameters must be positive");
  }
  const double dot_radius = std::max(2.0, radius_px / 5.0);
  const double disk_radius = radius_px + 3.0 * dot_radius;
  if (width <= 0) width = 2 * static_cast<int>(std::ceil(disk_radius + 6.0));
  if (height <= 0) height = width;
  const double cx = (width - 1) / 2.0;
  const double cy = (height - 1) / 2.0;

  std::vector<LuminanceFrame> frames;
  frames.reserve(static_cast<std::size_t>(frame_count));
  const double omega = 2.0 * kPi / period_s;
  for (int k = 0; k < frame_count; ++k) {
    const double t_s = k / frame_rate;
    const double angle = omega * t_s;
    const double dot_x = cx + radius_px * std::cos(angle);
    const double dot_y = cy + radius_px * std::sin(angle);

    LuminanceFrame f = make_frame(width, height, 0.0f,
                                  static_cast<std::uint64_t>(std::llround(k * 1e6 / frame_rate)));
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double r_disk = std::hypot(x - cx, y - cy);
        const double disk = 1.0 - smoothstep(disk_radius - 1.0, disk_radius + 1.0, r_disk);
        if (disk <= 0.0) continue;
        const double r_dot = std::hypot(x - dot_x, y - dot_y);
        const double dot_val = 1.0 - smoothstep(dot_radius - 1.0, dot_radius + 1.0, r_dot);
        f.at(x, y) = static_cast<float>(disk * (1.0 - dot_val));
      }
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

}  // namespace ejecta::render
