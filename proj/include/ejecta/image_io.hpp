#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ejecta/frame.hpp"

namespace ejecta::render {

// Luminance frames persist as binary PGM (P5), maxval 65535, big-endian
// samples, luminance scaled by 65535. A manifest `frames.txt` lists
// `<filename> <timestamp_us>` per line in ascending timestamp order.

void write_pgm16(const std::filesystem::path& path, const LuminanceFrame& frame);
LuminanceFrame read_pgm16(const std::filesystem::path& path);

/// 8-bit P5 writer for event-frame visualizations.
void write_pgm8(const std::filesystem::path& path, int width, int height,
                const std::vector<std::uint8_t>& pixels);

struct ManifestEntry {
  std::string filename;
  std::uint64_t timestamp_us = 0;
};

inline constexpr const char* kManifestName = "frames.txt";

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& dir);

/// Writes every frame plus the manifest into `dir` (created if needed).
/// Filenames are frame_00000.pgm, frame_00001.pgm, ...
void write_frame_dir(const std::filesystem::path& dir, const std::vector<LuminanceFrame>& frames);

/// Lazily loads PGM frames named by the manifest.
class DirFrameSequence final : public FrameSequence {
 public:
  explicit DirFrameSequence(const std::filesystem::path& dir);

  std::size_t size() const override { return entries_.size(); }
  int width() const override { return width_; }
  int height() const override { return height_; }
  LuminanceFrame frame(std::size_t index) override;

 private:
  std::filesystem::path dir_;
  std::vector<ManifestEntry> entries_;
  int width_ = 0;
  int height_ = 0;
};

}  // namespace ejecta::render
