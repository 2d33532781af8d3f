#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ejecta/dvs.hpp"
#include "ejecta/geometry.hpp"

namespace ejecta::scene {

/// Pinhole camera. The focal length in pixels is always derived from the
/// width and horizontal field of view on construction.
struct CameraModel {
  int width = 0;
  int height = 0;
  double hfov_rad = 0.0;
  double focal_px = 0.0;
  double cx = 0.0;
  double cy = 0.0;

  CameraModel() = default;
  CameraModel(int width_px, int height_px, double hfov_radians);
};

struct ParticleInit {
  Vec3 position;   // metres, asteroid-centred frame
  Vec3 velocity;   // m/s
  double diameter = 0.0;  // metres
};

struct ParticleState {
  Vec3 position;
  Vec3 velocity;
  double diameter = 0.0;
  bool alive = true;
};

/// Photometric knobs for the procedural renderer.
struct RenderParams {
  double asteroid_albedo = 0.044;
  double background = 1e-4;
  double psf_sigma_px = 0.8;
  double particle_albedo = 0.05;
};

/// Full scenario description; the dvs block is forwarded untouched to the
/// emulator.
struct ScenarioConfig {
  double mu = 4.892;            // gravitational parameter, m^3/s^2
  double asteroid_radius = 245.0;  // metres
  Vec3 sun_direction{1.0, 0.0, 0.0};
  Vec3 camera_position{0.0, -800.0, 0.0};
  Vec3 camera_pointing{0.0, 1.0, 0.0};
  Vec3 camera_up{0.0, 0.0, 1.0};
  int camera_width = 2592;
  int camera_height = 1944;
  double camera_hfov_rad = deg_to_rad(44.0);
  int frame_count = 41;
  double frame_rate = 30.0;     // playback frames/s, drives timestamps
  double sim_dt_s = 1.0 / 30.0;  // simulated seconds advanced per frame
  std::vector<ParticleInit> particles;
  RenderParams render;
  dvs::DvsConfig dvs;
  std::uint64_t seed = 0;

  CameraModel camera() const { return {camera_width, camera_height, camera_hfov_rad}; }

  /// Checks the documented invariants; throws std::invalid_argument naming
  /// the offending field.
  void validate() const;
};

/// One fixed-step RK4 integration of the two-body equation
/// r'' = -mu r / |r|^3. Marks the particle dead (without moving it back)
/// when the step ends below the asteroid surface; pass asteroid_radius = 0
/// to skip that check. Throws on |position| = 0.
ParticleState propagate(const ParticleState& state, double mu, double dt,
                        double asteroid_radius = 0.0);

struct Projection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

/// Camera basis: forward is the pointing direction, right = forward x up,
/// down completes the trihedron. u grows rightward, v grows downward.
struct CameraFrame {
  Vec3 origin;
  Vec3 forward;
  Vec3 right;
  Vec3 down;

  CameraFrame(const Vec3& position, const Vec3& pointing, const Vec3& up_hint);
};

/// Pinhole projection; nullopt when the point lies at or behind the camera
/// plane (depth <= 0).
std::optional<Projection> project(const Vec3& point, const CameraModel& camera,
                                  const CameraFrame& frame);
std::optional<Projection> project(const Vec3& point, const CameraModel& camera,
                                  const Vec3& camera_position, const Vec3& camera_pointing,
                                  const Vec3& up_hint = {0.0, 0.0, 1.0});

/// Apparent radius in pixels of a sphere of the given diameter at range.
double angular_radius_px(double diameter_m, double range_m, const CameraModel& camera);

/// Nearest positive ray/sphere intersection distance, if any.
std::optional<double> ray_sphere(const Vec3& origin, const Vec3& unit_dir, const Vec3& center,
                                 double radius);

/// Row-major mask (1 = on the asteroid body) of pixels whose rays hit the
/// sphere, dilated by dilate_px in Chebyshev distance.
std::vector<std::uint8_t> silhouette_mask(const CameraModel& camera, const CameraFrame& frame,
                                          double asteroid_radius, int dilate_px = 0);

}  // namespace ejecta::scene
