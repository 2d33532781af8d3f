// Drives the installed CLI binary through its failure paths; the binary
// path arrives via EJECTA_CLI.

#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "ejecta/evio.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* env = std::getenv("EJECTA_CLI");
  REQUIRE_MESSAGE(env != nullptr, "EJECTA_CLI must point at the ejecta binary");
  return env;
}

struct CliResult {
  int exit_code = -1;
  std::string output;
};

CliResult run(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " 2>&1";
  std::array<char, 4096> buf{};
  CliResult result;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (std::fgets(buf.data(), buf.size(), pipe) != nullptr) {
    result.output += buf.data();
  }
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "ejecta_cli_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("a missing frame directory produces a machine-parsable error") {
  const CliResult r = run("emulate --frames /nonexistent_dir_xyz --out /tmp/x.evt1");
  CHECK(r.exit_code != 0);
  CHECK(r.output.rfind("error:", 0) == 0);
  CHECK(r.output.find("frames.txt") != std::string::npos);
}

TEST_CASE("an invalid config names the offending key") {
  const fs::path dir = scratch();
  std::ofstream(dir / "bad.cfg") << "frames.count = 1\nframes.rate_hz = 30\n";
  const CliResult r =
      run("simulate --config " + (dir / "bad.cfg").string() + " --out " + (dir / "o").string());
  CHECK(r.exit_code != 0);
  CHECK(r.output.rfind("error:", 0) == 0);
  CHECK(r.output.find("frames.count") != std::string::npos);
}

TEST_CASE("unknown fixtures are rejected") {
  const CliResult r = run("fixture bogus --out /tmp/fx");
  CHECK(r.exit_code != 0);
  CHECK(r.output.rfind("error:", 0) == 0);
}

TEST_CASE("a truncated evt1 file is reported with context") {
  const fs::path dir = scratch();
  std::ofstream(dir / "bad.evt1", std::ios::binary) << "EVT";
  const CliResult r = run("accumulate --events " + (dir / "bad.evt1").string() + " --out " +
                          (dir / "bins").string());
  CHECK(r.exit_code != 0);
  CHECK(r.output.rfind("error:", 0) == 0);
}

TEST_CASE("seeded fixture runs are byte-reproducible") {
  const fs::path dir = scratch();
  const CliResult a = run("fixture single_particle --out " + (dir / "a").string());
  const CliResult b = run("fixture single_particle --out " + (dir / "b").string());
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    std::ifstream fa(entry.path(), std::ios::binary);
    std::ifstream fb(dir / "b" / entry.path().filename(), std::ios::binary);
    REQUIRE(fb.good());
    const std::string ca((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    const std::string cb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    CHECK(ca == cb);
  }
}

TEST_CASE("spinning-dot emulation balances ON and OFF events") {
  const fs::path dir = scratch();
  REQUIRE(run("fixture spinning_dot --out " + (dir / "dot").string() +
              " --frames 61 --rate-hz 60")
              .exit_code == 0);
  const CliResult r = run("emulate --frames " + (dir / "dot").string() + " --out " +
                          (dir / "dot.evt1").string() + " --no-noise");
  REQUIRE(r.exit_code == 0);
  double on = 0.0, off = 0.0;
  REQUIRE(std::sscanf(r.output.c_str(), "emulate: events=%*f on=%lf off=%lf", &on, &off) == 2);
  REQUIRE(on > 0.0);
  REQUIRE(off > 0.0);
  CHECK(std::abs(on - off) / std::max(on, off) < 0.10);

  SUBCASE("accumulate covers the stream span at the requested window") {
    const CliResult acc = run("accumulate --events " + (dir / "dot.evt1").string() + " --out " +
                              (dir / "bins").string() + " --window-us 33333");
    REQUIRE(acc.exit_code == 0);
    int frames = 0;
    REQUIRE(std::sscanf(acc.output.c_str(), "accumulate: frames=%d", &frames) == 1);
    const auto stream = ejecta::evio::read_evt1_file(dir / "dot.evt1");
    CHECK(frames == int(stream.events.back().t / 33333 + 1));
  }

  SUBCASE("track writes overlay images next to the tracks") {
    const CliResult trk = run("track --events " + (dir / "dot.evt1").string() + " --out " +
                              (dir / "tracks.csv").string() + " --overlay " +
                              (dir / "ovl").string());
    REQUIRE(trk.exit_code == 0);
    CHECK(fs::exists(dir / "tracks.csv"));
    CHECK(fs::exists(dir / "ovl" / "overlay_00000.pgm"));
  }
}

TEST_CASE("the env seed is picked up when no flag or config key is present") {
  const fs::path dir = scratch();
  // a frame pair with one changing pixel plus noise; identical env seeds
  // must give identical streams, different seeds different ones
  std::ofstream(dir / "mini.cfg") << "camera.width = 64\ncamera.height = 48\n"
                                  << "frames.count = 3\nframes.rate_hz = 30\n"
                                  << "asteroid.radius_m = 20\nsun.direction = 1 0 0\n"
                                  << "camera.position = 0 -100 0\ncamera.pointing = 0 1 0\n"
                                  << "particles[0].position = 0 -60 0\n"
                                  << "particles[0].velocity = 0.5 0 0\n"
                                  << "particles[0].diameter = 0.05\n"
                                  << "frames.sim_dt_s = 2\n";
  REQUIRE(run("simulate --config " + (dir / "mini.cfg").string() + " --out " +
              (dir / "frames").string())
              .exit_code == 0);
  auto emulate = [&](const std::string& name, const std::string& seed_env) {
    const std::string cmd = "EJECTA_EV_SEED=" + seed_env + " " + cli_path() + " emulate --frames " +
                            (dir / "frames").string() + " --out " + (dir / name).string() +
                            " > /dev/null 2>&1";
    REQUIRE(std::system(cmd.c_str()) == 0);
    std::ifstream in(dir / name, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  const std::string a = emulate("a.evt1", "11");
  const std::string b = emulate("b.evt1", "11");
  const std::string c = emulate("c.evt1", "12");
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("a constant scene emulated without noise reports zero events") {
  const fs::path dir = scratch();
  REQUIRE(run("fixture static --out " + (dir / "s").string() + " --frames 4").exit_code == 0);
  const CliResult r = run("emulate --frames " + (dir / "s").string() + " --out " +
                          (dir / "s.evt1").string() + " --no-noise");
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("events=0 ") != std::string::npos);
}
