#include "ejecta/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace ejecta {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

ConfigTree ConfigTree::parse_string(const std::string& text, const std::string& origin) {
  ConfigTree tree;
  std::istringstream in(text);
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_number) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError(origin + ":" + std::to_string(line_number) + ": empty key or value");
    }
    tree.values_[key] = value;
  }
  return tree;
}

ConfigTree ConfigTree::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path.string());
}

std::string ConfigTree::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("config: missing key '" + key + "'");
  return it->second;
}

double ConfigTree::get_double(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw ConfigError("");
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "': cannot parse '" + v + "' as a number");
  }
}

std::int64_t ConfigTree::get_int(const std::string& key) const {
  const std::string v = get_string(key);
  std::int64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("config: key '" + key + "': cannot parse '" + v + "' as an integer");
  }
  return out;
}

std::uint64_t ConfigTree::get_u64(const std::string& key) const {
  const std::string v = get_string(key);
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("config: key '" + key + "': cannot parse '" + v +
                      "' as an unsigned integer");
  }
  return out;
}

Vec3 ConfigTree::get_vec3(const std::string& key) const {
  const std::string v = get_string(key);
  std::istringstream in(v);
  Vec3 out;
  std::string extra;
  if (!(in >> out.x >> out.y >> out.z) || (in >> extra)) {
    throw ConfigError("config: key '" + key + "': expected three numbers, got '" + v + "'");
  }
  return out;
}

double ConfigTree::get_double_or(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}
std::int64_t ConfigTree::get_int_or(const std::string& key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}
std::uint64_t ConfigTree::get_u64_or(const std::string& key, std::uint64_t fallback) const {
  return has(key) ? get_u64(key) : fallback;
}
Vec3 ConfigTree::get_vec3_or(const std::string& key, const Vec3& fallback) const {
  return has(key) ? get_vec3(key) : fallback;
}

namespace {

Vec3 unit_or_throw(const Vec3& v, const std::string& key) {
  const double n = norm(v);
  if (std::abs(n - 1.0) > 1e-3) {
    throw ConfigError("config: key '" + key + "' must be a unit vector (norm " +
                      std::to_string(n) + ")");
  }
  return v / n;  // absorb text round-off so the stored vector is unit to 1e-15
}

}  // namespace

scene::ScenarioConfig scenario_from_config(const ConfigTree& tree) {
  scene::ScenarioConfig cfg;
  cfg.camera_width = static_cast<int>(tree.get_int_or("camera.width", cfg.camera_width));
  cfg.camera_height = static_cast<int>(tree.get_int_or("camera.height", cfg.camera_height));
  cfg.camera_hfov_rad =
      deg_to_rad(tree.get_double_or("camera.hfov_deg", rad_to_deg(cfg.camera_hfov_rad)));
  cfg.camera_position = tree.get_vec3_or("camera.position", cfg.camera_position);
  if (tree.has("camera.pointing")) {
    cfg.camera_pointing = unit_or_throw(tree.get_vec3("camera.pointing"), "camera.pointing");
  }
  if (tree.has("camera.up")) {
    cfg.camera_up = unit_or_throw(tree.get_vec3("camera.up"), "camera.up");
  }
  cfg.mu = tree.get_double_or("dynamics.mu", cfg.mu);
  cfg.asteroid_radius = tree.get_double_or("asteroid.radius_m", cfg.asteroid_radius);
  if (tree.has("sun.direction")) {
    cfg.sun_direction = unit_or_throw(tree.get_vec3("sun.direction"), "sun.direction");
  }
  cfg.frame_count = static_cast<int>(tree.get_int_or("frames.count", cfg.frame_count));
  cfg.frame_rate = tree.get_double_or("frames.rate_hz", cfg.frame_rate);
  cfg.sim_dt_s = tree.get_double_or("frames.sim_dt_s", 1.0 / cfg.frame_rate);
  cfg.seed = tree.get_u64_or("seed", cfg.seed);

  cfg.render.asteroid_albedo = tree.get_double_or("render.albedo", cfg.render.asteroid_albedo);
  cfg.render.background = tree.get_double_or("render.background", cfg.render.background);
  cfg.render.psf_sigma_px = tree.get_double_or("render.psf_sigma_px", cfg.render.psf_sigma_px);
  cfg.render.particle_albedo =
      tree.get_double_or("render.particle_albedo", cfg.render.particle_albedo);

  cfg.dvs = dvs_from_config(tree, cfg.dvs);
  cfg.dvs.seed = cfg.seed;

  for (int i = 0;; ++i) {
    const std::string base = "particles[" + std::to_string(i) + "].";
    const bool has_any =
        tree.has(base + "position") || tree.has(base + "velocity") || tree.has(base + "diameter");
    if (!has_any) break;
    scene::ParticleInit p;
    p.position = tree.get_vec3(base + "position");
    p.velocity = tree.get_vec3(base + "velocity");
    p.diameter = tree.get_double(base + "diameter");
    cfg.particles.push_back(p);
  }

  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

dvs::DvsConfig dvs_from_config(const ConfigTree& tree, dvs::DvsConfig base) {
  base.theta_on = tree.get_double_or("dvs.theta_on", base.theta_on);
  base.theta_off = tree.get_double_or("dvs.theta_off", base.theta_off);
  base.refractory_us = tree.get_u64_or("dvs.refractory_us", base.refractory_us);
  base.i_floor = tree.get_double_or("dvs.i_floor", base.i_floor);
  base.leak_rate_hz = tree.get_double_or("dvs.leak_rate_hz", base.leak_rate_hz);
  base.shot_rate_hz = tree.get_double_or("dvs.shot_rate_hz", base.shot_rate_hz);
  base.hot_pixel_fraction = tree.get_double_or("dvs.hot_pixel_fraction", base.hot_pixel_fraction);
  base.hot_pixel_rate_hz = tree.get_double_or("dvs.hot_pixel_rate_hz", base.hot_pixel_rate_hz);
  base.seed = tree.get_u64_or("seed", base.seed);
  try {
    base.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return base;
}

track::TrackParams track_params_from_config(const ConfigTree& tree) {
  track::TrackParams p;
  p.window_us = tree.get_u64_or("track.window_us", p.window_us);
  p.eps_px = tree.get_double_or("track.eps_px", p.eps_px);
  p.min_cluster_size = static_cast<int>(tree.get_int_or("track.min_cluster_size",
                                                        p.min_cluster_size));
  p.gate_px = tree.get_double_or("track.gate_px", p.gate_px);
  p.confirm_hits = static_cast<int>(tree.get_int_or("track.confirm_hits", p.confirm_hits));
  p.max_misses = static_cast<int>(tree.get_int_or("track.max_misses", p.max_misses));
  p.denoise_min_neighbors = static_cast<int>(
      tree.get_int_or("track.denoise_min_neighbors", p.denoise_min_neighbors));
  p.denoise_radius_px =
      static_cast<int>(tree.get_int_or("track.denoise_radius_px", p.denoise_radius_px));
  p.denoise_window_us = tree.get_u64_or("track.denoise_window_us", p.denoise_window_us);
  p.velocity_fit_count =
      static_cast<int>(tree.get_int_or("track.velocity_fit_count", p.velocity_fit_count));
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return p;
}

}  // namespace ejecta
