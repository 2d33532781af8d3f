#include "ejecta/scene.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ejecta::scene {

CameraModel::CameraModel(int width_px, int height_px, double hfov_radians)
    : width(width_px),
      height(height_px),
      hfov_rad(hfov_radians),
      focal_px((width_px / 2.0) / std::tan(hfov_radians / 2.0)),
      cx((width_px - 1) / 2.0),
      cy((height_px - 1) / 2.0) {
  if (width_px <= 0 || height_px <= 0) {
    throw std::invalid_argument("camera: dimensions must be positive");
  }
  if (!(hfov_radians > 0.0 && hfov_radians < kPi)) {
    throw std::invalid_argument("camera: hfov must lie in (0, 180) degrees");
  }
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& what) {
    throw std::invalid_argument("config: " + key + " " + what);
  };
  if (!(frame_rate > 0.0)) fail("frames.rate_hz", "must be > 0");
  if (frame_count < 2) fail("frames.count", "must be >= 2 (emulation needs a frame pair)");
  if (!(sim_dt_s > 0.0)) fail("frames.sim_dt_s", "must be > 0");
  if (!(asteroid_radius > 0.0)) fail("asteroid.radius_m", "must be > 0");
  if (!(mu >= 0.0)) fail("dynamics.mu", "must be >= 0");
  if (camera_width <= 0 || camera_width > 65535) fail("camera.width", "must lie in [1, 65535]");
  if (camera_height <= 0 || camera_height > 65535) fail("camera.height", "must lie in [1, 65535]");
  if (!(camera_hfov_rad > 0.0 && camera_hfov_rad < kPi)) {
    fail("camera.hfov_deg", "must lie in (0, 180)");
  }
  if (std::abs(norm(sun_direction) - 1.0) > 1e-9) fail("sun.direction", "must have unit norm");
  if (std::abs(norm(camera_pointing) - 1.0) > 1e-9) fail("camera.pointing", "must have unit norm");
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const ParticleInit& p = particles[i];
    if (!(p.diameter > 0.0 && p.diameter < asteroid_radius)) {
      fail("particles[" + std::to_string(i) + "].diameter",
           "must lie in (0, asteroid.radius_m)");
    }
    if (norm(p.position) < asteroid_radius) {
      fail("particles[" + std::to_string(i) + "].position", "starts below the asteroid surface");
    }
  }
  dvs.validate();
}

namespace {

Vec3 gravity(const Vec3& r, double mu) {
  const double d2 = norm_squared(r);
  const double d = std::sqrt(d2);
  return r * (-mu / (d2 * d));
}

}  // namespace

ParticleState propagate(const ParticleState& state, double mu, double dt,
                        double asteroid_radius) {
  if (!(dt > 0.0)) throw std::invalid_argument("propagate: dt must be > 0");
  if (norm_squared(state.position) == 0.0) {
    throw std::domain_error("propagate: particle at gravitational singularity");
  }

  const Vec3 r0 = state.position;
  const Vec3 v0 = state.velocity;

  const Vec3 k1_r = v0;
  const Vec3 k1_v = gravity(r0, mu);
  const Vec3 k2_r = v0 + k1_v * (dt / 2.0);
  const Vec3 k2_v = gravity(r0 + k1_r * (dt / 2.0), mu);
  const Vec3 k3_r = v0 + k2_v * (dt / 2.0);
  const Vec3 k3_v = gravity(r0 + k2_r * (dt / 2.0), mu);
  const Vec3 k4_r = v0 + k3_v * dt;
  const Vec3 k4_v = gravity(r0 + k3_r * dt, mu);

  ParticleState next = state;
  next.position = r0 + (k1_r + 2.0 * k2_r + 2.0 * k3_r + k4_r) * (dt / 6.0);
  next.velocity = v0 + (k1_v + 2.0 * k2_v + 2.0 * k3_v + k4_v) * (dt / 6.0);
  if (asteroid_radius > 0.0 && norm(next.position) < asteroid_radius) {
    next.alive = false;
  }
  return next;
}

CameraFrame::CameraFrame(const Vec3& position, const Vec3& pointing, const Vec3& up_hint)
    : origin(position), forward(normalized(pointing)) {
  Vec3 r = cross(forward, up_hint);
  if (norm(r) < 1e-9) {
    // pointing parallel to the up hint; fall back to another axis
    r = cross(forward, Vec3{0.0, 1.0, 0.0});
    if (norm(r) < 1e-9) r = cross(forward, Vec3{1.0, 0.0, 0.0});
  }
  right = normalized(r);
  down = cross(forward, right);
}

std::optional<Projection> project(const Vec3& point, const CameraModel& camera,
                                  const CameraFrame& frame) {
  const Vec3 rel = point - frame.origin;
  const double depth = dot(rel, frame.forward);
  if (depth <= 0.0) return std::nullopt;
  Projection p;
  p.depth = depth;
  p.u = camera.cx + camera.focal_px * dot(rel, frame.right) / depth;
  p.v = camera.cy + camera.focal_px * dot(rel, frame.down) / depth;
  return p;
}

std::optional<Projection> project(const Vec3& point, const CameraModel& camera,
                                  const Vec3& camera_position, const Vec3& camera_pointing,
                                  const Vec3& up_hint) {
  return project(point, camera, CameraFrame(camera_position, camera_pointing, up_hint));
}

double angular_radius_px(double diameter_m, double range_m, const CameraModel& camera) {
  if (!(range_m > 0.0)) throw std::domain_error("angular_radius_px: range must be > 0");
  if (!(diameter_m > 0.0)) throw std::domain_error("angular_radius_px: diameter must be > 0");
  return camera.focal_px * (diameter_m / 2.0) / range_m;
}

std::optional<double> ray_sphere(const Vec3& origin, const Vec3& unit_dir, const Vec3& center,
                                 double radius) {
  const Vec3 oc = origin - center;
  const double b = dot(unit_dir, oc);
  const double c = norm_squared(oc) - radius * radius;
  const double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  const double s = std::sqrt(disc);
  const double t_near = -b - s;
  if (t_near > 0.0) return t_near;
  const double t_far = -b + s;
  if (t_far > 0.0) return t_far;
  return std::nullopt;
}

std::vector<std::uint8_t> silhouette_mask(const CameraModel& camera, const CameraFrame& frame,
                                          double asteroid_radius, int dilate_px) {
  const std::size_t npx = static_cast<std::size_t>(camera.width) * camera.height;
  std::vector<std::uint8_t> mask(npx, 0);
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      const Vec3 dir = normalized(frame.forward + frame.right * ((x - camera.cx) / camera.focal_px) +
                                  frame.down * ((y - camera.cy) / camera.focal_px));
      if (ray_sphere(frame.origin, dir, Vec3{0, 0, 0}, asteroid_radius)) {
        mask[static_cast<std::size_t>(y) * camera.width + x] = 1;
      }
    }
  }
  if (dilate_px > 0) {
    // separable Chebyshev dilation: rows, then columns
    std::vector<std::uint8_t> tmp(npx, 0);
    for (int y = 0; y < camera.height; ++y) {
      const std::size_t row = static_cast<std::size_t>(y) * camera.width;
      for (int x = 0; x < camera.width; ++x) {
        if (!mask[row + x]) continue;
        const int lo = std::max(0, x - dilate_px);
        const int hi = std::min(camera.width - 1, x + dilate_px);
        for (int i = lo; i <= hi; ++i) tmp[row + i] = 1;
      }
    }
    std::vector<std::uint8_t> out(npx, 0);
    for (int y = 0; y < camera.height; ++y) {
      const std::size_t row = static_cast<std::size_t>(y) * camera.width;
      for (int x = 0; x < camera.width; ++x) {
        if (!tmp[row + x]) continue;
        const int lo = std::max(0, y - dilate_px);
        const int hi = std::min(camera.height - 1, y + dilate_px);
        for (int j = lo; j <= hi; ++j) {
          out[static_cast<std::size_t>(j) * camera.width + x] = 1;
        }
      }
    }
    return out;
  }
  return mask;
}

}  // namespace ejecta::scene
