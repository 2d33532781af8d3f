#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ejecta/config.hpp"
#include "ejecta/dvs.hpp"
#include "ejecta/scene.hpp"
#include "ejecta/track.hpp"

namespace ejecta::cli {

/// Per-frame projected particle ground truth, as written to truth.csv
/// (`frame,particle_id,u,v,visible`). Hidden rows keep u = v = -1.
struct TruthRow {
  int frame = 0;
  int particle_id = 0;
  double u = -1.0;
  double v = -1.0;
  bool visible = false;
};

void write_truth_csv(const std::filesystem::path& path, const std::vector<TruthRow>& rows);
std::vector<TruthRow> read_truth_csv(const std::filesystem::path& path);

/// Flattened track output (`track_id,t_us,u,v,event_count,status`).
struct TrackRow {
  int track_id = 0;
  std::uint64_t t_us = 0;
  double u = 0.0;
  double v = 0.0;
  int event_count = 0;
  std::string status;
};

void write_tracks_csv(const std::filesystem::path& path, const std::vector<track::Track>& tracks);
std::vector<TrackRow> read_tracks_csv(const std::filesystem::path& path);

struct SimulateResult {
  int frame_count = 0;
  int particle_count = 0;
};

/// One orchestrated pass over the pipeline. Stages may be listed in any
/// order; they execute in dependency order (simulate -> emulate ->
/// accumulate -> track -> eval) under a single seed, and every output file
/// under output_dir is reproducible from config + seed.
struct PipelineRun {
  std::filesystem::path config_path;
  std::filesystem::path output_dir;
  std::vector<std::string> stages;  // subset of the five stage names; empty = all
  std::optional<std::uint64_t> seed_override;
  int workers = 1;
};

/// Renders the scenario into out_dir: PGM frames, frames.txt manifest, and
/// truth.csv.
SimulateResult cmd_simulate(const scene::ScenarioConfig& config,
                            const std::filesystem::path& out_dir, int workers = 1);

struct EmulateResult {
  std::uint64_t events = 0;
  std::uint64_t on_events = 0;
  std::uint64_t off_events = 0;
  double wall_seconds = 0.0;
  double events_per_second = 0.0;
};

/// Converts a frame directory into events.evt1 at out_file.
EmulateResult cmd_emulate(const std::filesystem::path& frame_dir, const dvs::DvsConfig& cfg,
                          const std::filesystem::path& out_file, int workers = 1);

/// Bins an EVT1 file into event-frame PGMs (eventframe_00000.pgm, ...);
/// returns the frame count.
int cmd_accumulate(const std::filesystem::path& events_file, const std::filesystem::path& out_dir,
                   std::uint64_t window_us, std::uint64_t t0 = 0);

struct TrackCmdResult {
  int confirmed_tracks = 0;
};

/// Runs the tracker over an EVT1 file and writes tracks.csv; when a
/// scenario is given its asteroid silhouette masks on-body events and
/// overlay images (event frames plus centroid crosshairs) can be written.
TrackCmdResult cmd_track(const std::filesystem::path& events_file,
                         const std::filesystem::path& out_csv, const track::TrackParams& params,
                         const scene::ScenarioConfig* mask_scenario = nullptr,
                         const std::filesystem::path* overlay_dir = nullptr);

struct FixtureParams {
  int frame_count = 0;      // 0 = per-fixture default
  double frame_rate = 0.0;  // 0 = per-fixture default
  double period_s = 1.0;
  double radius_px = 60.0;
  int width = 0;   // 0 = derive
  int height = 0;
};

/// Built-in validation scenes: "spinning_dot", "static", "single_particle".
/// single_particle also writes truth.csv. Returns the frame count written.
int cmd_fixture(const std::string& name, const std::filesystem::path& out_dir,
                const FixtureParams& params);

/// The scenario behind the single_particle fixture (exposed so tests can
/// reuse the ground truth).
scene::ScenarioConfig single_particle_scenario();

struct EvalResult {
  int truth_particles = 0;
  int recovered = 0;
  int confirmed_tracks = 0;
  int false_tracks = 0;
  double mean_error_px = 0.0;  // over matched tracks
};

/// Matches tracks against truth: a track matches the particle with the
/// smallest mean distance to the interpolated truth when that mean is below
/// match_px; a particle is recovered when at least one track matches it.
EvalResult cmd_eval(const std::filesystem::path& tracks_csv,
                    const std::filesystem::path& truth_csv, double frame_rate_hz,
                    double match_px = 3.0);
EvalResult evaluate_tracks(const std::vector<track::Track>& tracks,
                           const std::vector<TruthRow>& truth, double frame_rate_hz,
                           double match_px = 3.0);

struct PipelineResult {
  SimulateResult simulate;
  EmulateResult emulate;
  int event_frames = 0;
  TrackCmdResult track;
  std::optional<EvalResult> eval;
};

/// Executes the requested stages (frames/ events.evt1 eventframes/
/// tracks.csv under run.output_dir). Unknown stage names are rejected.
PipelineResult run_pipeline(const PipelineRun& run);

}  // namespace ejecta::cli
