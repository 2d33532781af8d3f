#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ejecta/config.hpp"
#include "ejecta/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ejecta;

namespace {

// Every numeric config key doubles as a CLI flag: dots stay, underscores
// become hyphens (`--dvs.theta-on 0.25` overrides `dvs.theta_on`).
const std::vector<std::string> kScenarioKeys = {
    "camera.width",        "camera.height",          "camera.hfov_deg",
    "dynamics.mu",         "asteroid.radius_m",      "frames.count",
    "frames.rate_hz",      "frames.sim_dt_s",        "render.albedo",
    "render.background",   "render.psf_sigma_px",    "render.particle_albedo",
};
const std::vector<std::string> kDvsKeys = {
    "dvs.theta_on",       "dvs.theta_off",          "dvs.refractory_us",
    "dvs.i_floor",        "dvs.leak_rate_hz",       "dvs.shot_rate_hz",
    "dvs.hot_pixel_fraction", "dvs.hot_pixel_rate_hz",
};
const std::vector<std::string> kTrackKeys = {
    "track.window_us",           "track.eps_px",          "track.min_cluster_size",
    "track.gate_px",             "track.confirm_hits",    "track.max_misses",
    "track.denoise_min_neighbors", "track.denoise_radius_px", "track.denoise_window_us",
    "track.velocity_fit_count",
};

std::string flag_name(const std::string& key) {
  std::string flag = "--" + key;
  for (char& c : flag) {
    if (c == '_') c = '-';
  }
  return flag;
}

struct Overrides {
  std::vector<std::pair<std::string, std::string>> values;

  void attach(CLI::App* cmd, const std::vector<std::string>& keys) {
    for (const std::string& key : keys) {
      cmd->add_option_function<std::string>(
          flag_name(key),
          [this, key](const std::string& v) { values.emplace_back(key, v); },
          "override config key " + key);
    }
  }

  void apply(ConfigTree& tree) const {
    for (const auto& [key, value] : values) tree.set(key, value);
  }
};

// Seed precedence: --seed flag, then the config key, then EJECTA_EV_SEED.
void resolve_seed(ConfigTree& tree, const std::optional<std::uint64_t>& flag_seed) {
  if (flag_seed) {
    tree.set("seed", std::to_string(*flag_seed));
    return;
  }
  if (tree.has("seed")) return;
  if (const char* env = std::getenv("EJECTA_EV_SEED")) {
    tree.set("seed", env);
  }
}

ConfigTree load_tree(const std::optional<std::string>& config_path, const Overrides& overrides,
                     const std::optional<std::uint64_t>& seed) {
  ConfigTree tree;
  if (config_path) tree = ConfigTree::parse_file(*config_path);
  overrides.apply(tree);
  resolve_seed(tree, seed);
  return tree;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"asteroid-ejecta event-camera simulation and tracking toolkit"};
  app.require_subcommand(1);

  // ---- simulate ----
  auto* simulate = app.add_subcommand("simulate", "render scenario frames + ground truth");
  std::string sim_config;
  std::string sim_out;
  std::optional<std::uint64_t> sim_seed;
  int sim_workers = 1;
  Overrides sim_overrides;
  simulate->add_option("--config", sim_config, "scenario config file")->required();
  simulate->add_option("--out", sim_out, "output frame directory")->required();
  simulate->add_option("--seed", sim_seed, "override the scenario seed");
  simulate->add_option("--workers", sim_workers, "worker threads (results are identical)");
  sim_overrides.attach(simulate, kScenarioKeys);
  sim_overrides.attach(simulate, kDvsKeys);

  // ---- emulate ----
  auto* emulate = app.add_subcommand("emulate", "convert a frame directory to an event stream");
  std::string emu_frames;
  std::string emu_out = "events.evt1";
  std::optional<std::string> emu_config;
  std::optional<std::uint64_t> emu_seed;
  int emu_workers = 1;
  bool emu_no_noise = false;
  Overrides emu_overrides;
  emulate->add_option("--frames", emu_frames, "input frame directory")->required();
  emulate->add_option("--out", emu_out, "output EVT1 file");
  emulate->add_option("--config", emu_config, "optional config file for dvs.* settings");
  emulate->add_option("--seed", emu_seed, "noise seed");
  emulate->add_option("--workers", emu_workers, "worker threads (results are identical)");
  emulate->add_flag("--no-noise", emu_no_noise, "disable all noise sources");
  emu_overrides.attach(emulate, kDvsKeys);

  // ---- accumulate ----
  auto* accumulate = app.add_subcommand("accumulate", "bin events into event-frame images");
  std::string acc_events;
  std::string acc_out;
  std::uint64_t acc_window = 33333;
  std::uint64_t acc_t0 = 0;
  accumulate->add_option("--events", acc_events, "input EVT1 file")->required();
  accumulate->add_option("--out", acc_out, "output image directory")->required();
  accumulate->add_option("--window-us", acc_window, "bin width in microseconds");
  accumulate->add_option("--t0-us", acc_t0, "bin origin in microseconds");

  // ---- track ----
  auto* track_cmd = app.add_subcommand("track", "detect and track particles in an event stream");
  std::string trk_events;
  std::string trk_out = "tracks.csv";
  std::optional<std::string> trk_config;
  std::optional<std::string> trk_overlay;
  bool trk_no_mask = false;
  int trk_workers = 1;
  Overrides trk_overrides;
  track_cmd->add_option("--events", trk_events, "input EVT1 file")->required();
  track_cmd->add_option("--out", trk_out, "output tracks CSV");
  track_cmd->add_option("--config", trk_config,
                        "scenario config (track.* params + asteroid mask)");
  track_cmd->add_option("--overlay", trk_overlay, "directory for overlay images");
  track_cmd->add_flag("--no-mask", trk_no_mask, "skip the asteroid silhouette mask");
  track_cmd->add_option("--workers", trk_workers,
                        "worker threads (tracking is sequential; results are identical)");
  trk_overrides.attach(track_cmd, kTrackKeys);

  // ---- fixture ----
  auto* fixture = app.add_subcommand("fixture", "write a built-in validation scene");
  std::string fix_name;
  std::string fix_out;
  cli::FixtureParams fix_params;
  fixture->add_option("name", fix_name, "spinning_dot | static | single_particle")->required();
  fixture->add_option("--out", fix_out, "output frame directory")->required();
  fixture->add_option("--frames", fix_params.frame_count, "frame count (fixture default if unset)");
  fixture->add_option("--rate-hz", fix_params.frame_rate, "frame rate (fixture default if unset)");
  fixture->add_option("--period-s", fix_params.period_s, "spinning dot period");
  fixture->add_option("--radius-px", fix_params.radius_px, "spinning dot path radius");
  fixture->add_option("--width", fix_params.width, "canvas width");
  fixture->add_option("--height", fix_params.height, "canvas height");

  // ---- eval ----
  auto* eval = app.add_subcommand("eval", "compare tracks CSV against ground truth");
  std::string ev_tracks;
  std::string ev_truth;
  double ev_rate = 30.0;
  double ev_match = 3.0;
  eval->add_option("--tracks", ev_tracks, "tracks CSV")->required();
  eval->add_option("--truth", ev_truth, "truth CSV from simulate")->required();
  eval->add_option("--rate-hz", ev_rate, "frame rate behind the truth frame indices");
  eval->add_option("--match-px", ev_match, "mean-distance threshold for a match");

  try {
    app.parse(argc, argv);

    if (simulate->parsed()) {
      const ConfigTree tree = load_tree(sim_config, sim_overrides, sim_seed);
      const scene::ScenarioConfig cfg = scenario_from_config(tree);
      const cli::SimulateResult r = cli::cmd_simulate(cfg, sim_out, sim_workers);
      std::printf("simulate: frames=%d particles=%d out=%s\n", r.frame_count, r.particle_count,
                  sim_out.c_str());
    } else if (emulate->parsed()) {
      const ConfigTree tree = load_tree(emu_config, emu_overrides, emu_seed);
      dvs::DvsConfig cfg = dvs_from_config(tree);
      if (emu_no_noise) cfg.no_noise();
      const cli::EmulateResult r = cli::cmd_emulate(emu_frames, cfg, emu_out, emu_workers);
      std::printf(
          "emulate: events=%llu on=%llu off=%llu wall_s=%.3f events_per_s=%.0f out=%s\n",
          static_cast<unsigned long long>(r.events), static_cast<unsigned long long>(r.on_events),
          static_cast<unsigned long long>(r.off_events), r.wall_seconds, r.events_per_second,
          emu_out.c_str());
    } else if (accumulate->parsed()) {
      const int n = cli::cmd_accumulate(acc_events, acc_out, acc_window, acc_t0);
      std::printf("accumulate: frames=%d window_us=%llu out=%s\n", n,
                  static_cast<unsigned long long>(acc_window), acc_out.c_str());
    } else if (track_cmd->parsed()) {
      ConfigTree tree;
      std::optional<scene::ScenarioConfig> scenario;
      if (trk_config) {
        tree = ConfigTree::parse_file(*trk_config);
        scenario = scenario_from_config(tree);
      }
      trk_overrides.apply(tree);
      const track::TrackParams params = track_params_from_config(tree);
      const scene::ScenarioConfig* mask_scn =
          (scenario && !trk_no_mask) ? &*scenario : nullptr;
      std::optional<fs::path> overlay;
      if (trk_overlay) overlay = *trk_overlay;
      const cli::TrackCmdResult r =
          cli::cmd_track(trk_events, trk_out, params, mask_scn, overlay ? &*overlay : nullptr);
      std::printf("track: confirmed_tracks=%d out=%s\n", r.confirmed_tracks, trk_out.c_str());
    } else if (fixture->parsed()) {
      const int frames = cli::cmd_fixture(fix_name, fix_out, fix_params);
      std::printf("fixture: name=%s frames=%d out=%s\n", fix_name.c_str(), frames,
                  fix_out.c_str());
    } else if (eval->parsed()) {
      const cli::EvalResult r = cli::cmd_eval(ev_tracks, ev_truth, ev_rate, ev_match);
      std::printf(
          "eval: recovered=%d/%d mean_error_px=%.3f confirmed_tracks=%d false_tracks=%d\n",
          r.recovered, r.truth_particles, r.mean_error_px, r.confirmed_tracks, r.false_tracks);
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);  // --help and friends
    }
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
