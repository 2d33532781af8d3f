#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ejecta/scene.hpp"
#include "ejecta/track.hpp"

namespace ejecta {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Flat dotted-key configuration tree parsed from `key = value` lines.
/// '#' starts a comment; vector values are three whitespace-separated
/// numbers; particles use indexed keys like `particles[3].velocity`.
class ConfigTree {
 public:
  static ConfigTree parse_file(const std::filesystem::path& path);
  static ConfigTree parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  Vec3 get_vec3(const std::string& key) const;

  double get_double_or(const std::string& key, double fallback) const;
  std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_u64_or(const std::string& key, std::uint64_t fallback) const;
  Vec3 get_vec3_or(const std::string& key, const Vec3& fallback) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Builds and validates a scenario from the tree. Unknown `particles[i]`
/// gaps or malformed values raise ConfigError naming the offending key.
scene::ScenarioConfig scenario_from_config(const ConfigTree& tree);

/// Emulator parameters from the `dvs.*` keys, over the given base values.
dvs::DvsConfig dvs_from_config(const ConfigTree& tree, dvs::DvsConfig base = {});

/// Tracker parameters from the `track.*` keys (defaults where absent).
track::TrackParams track_params_from_config(const ConfigTree& tree);

}  // namespace ejecta
