#pragma once

#include <cstdint>
#include <vector>

#include "ejecta/frame.hpp"
#include "ejecta/scene.hpp"

namespace ejecta::render {

/// Lambertian-shaded sphere at the origin plus uniform background. Body
/// pixels carry background + albedo * max(0, n . sun); everything else the
/// background alone.
LuminanceFrame shade_asteroid(const scene::CameraModel& camera, const scene::CameraFrame& frame,
                              double asteroid_radius, const Vec3& sun_direction, double albedo,
                              double background);

/// Adds one particle as a Gaussian blob of sigma = max(psf_sigma_px,
/// angular radius) at its projected position, amplitude particle_albedo
/// scaled by a (1 + cos phase)/2 illumination factor. Contributes nothing
/// when the particle is dead, behind the camera, or occluded by the
/// asteroid. Values are clamped to [0, 1] at sequence level, not here.
void splat_particle(LuminanceFrame& frame, const scene::ParticleState& particle,
                    const scene::CameraModel& camera, const scene::CameraFrame& cam_frame,
                    const Vec3& sun_direction, double asteroid_radius,
                    const scene::RenderParams& params);

/// Incremental renderer used by both render_sequence and the streaming
/// pipeline: holds the static asteroid layer and the propagated particle
/// states.
class SceneRenderer {
 public:
  explicit SceneRenderer(const scene::ScenarioConfig& config);

  std::uint64_t timestamp_us(int frame_index) const;
  /// Renders the frame at the current particle states.
  LuminanceFrame render_current(int frame_index) const;
  /// Renders a frame for explicit particle states; lets callers snapshot
  /// the propagation and rasterize frames concurrently.
  LuminanceFrame render_at(int frame_index,
                           const std::vector<scene::ParticleState>& particles) const;
  /// Advances particle states by sim_dt_s (10 RK4 substeps).
  void step();

  const std::vector<scene::ParticleState>& particles() const { return particles_; }
  const scene::CameraModel& camera() const { return camera_; }
  const scene::CameraFrame& camera_frame() const { return frame_; }

 private:
  scene::ScenarioConfig config_;
  scene::CameraModel camera_;
  scene::CameraFrame frame_;
  LuminanceFrame base_;
  std::vector<scene::ParticleState> particles_;
};

/// All frames of the scenario; frame k is stamped round(k * 1e6 /
/// frame_rate) microseconds. Deterministic for a given config.
std::vector<LuminanceFrame> render_sequence(const scene::ScenarioConfig& config);

/// Fig-style validation scene: a black dot riding a white disk on a dark
/// background, dot centre orbiting at 2*pi/period_s. Canvas size is derived
/// from the path radius unless given explicitly.
std::vector<LuminanceFrame> spinning_dot_sequence(double radius_px, double period_s,
                                                  double frame_rate, int frame_count,
                                                  int width = 0, int height = 0);

}  // namespace ejecta::render
