#include "ejecta/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ejecta::render {

void write_pgm16(const std::filesystem::path& path, const LuminanceFrame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "P5\n" << frame.width << " " << frame.height << "\n65535\n";
  std::vector<std::uint8_t> row(static_cast<std::size_t>(frame.width) * 2);
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      const float v = std::clamp(frame.at(x, y), 0.0f, 1.0f);
      const auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0f));
      row[2 * x] = static_cast<std::uint8_t>(q >> 8);  // big-endian per PGM spec
      row[2 * x + 1] = static_cast<std::uint8_t>(q & 0xff);
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw std::runtime_error("short write to " + path.string());
}

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  return tok;
}

}  // namespace

LuminanceFrame read_pgm16(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  if (next_token(in) != "P5") {
    throw std::runtime_error(path.string() + ": not a binary PGM (P5) file");
  }
  LuminanceFrame frame;
  long maxval = 0;
  try {
    frame.width = std::stoi(next_token(in));
    frame.height = std::stoi(next_token(in));
    maxval = std::stol(next_token(in));
  } catch (const std::exception&) {
    throw std::runtime_error(path.string() + ": malformed PGM header");
  }
  if (frame.width <= 0 || frame.height <= 0 || maxval <= 0 || maxval > 65535) {
    throw std::runtime_error(path.string() + ": unsupported PGM geometry/maxval");
  }
  const std::size_t npx = static_cast<std::size_t>(frame.width) * frame.height;
  frame.pixels.resize(npx);
  const float scale = 1.0f / static_cast<float>(maxval);
  if (maxval > 255) {
    std::vector<std::uint8_t> raw(npx * 2);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
      throw std::runtime_error(path.string() + ": truncated PGM payload");
    }
    for (std::size_t i = 0; i < npx; ++i) {
      frame.pixels[i] =
          static_cast<float>((std::uint16_t(raw[2 * i]) << 8) | raw[2 * i + 1]) * scale;
    }
  } else {
    std::vector<std::uint8_t> raw(npx);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
      throw std::runtime_error(path.string() + ": truncated PGM payload");
    }
    for (std::size_t i = 0; i < npx; ++i) frame.pixels[i] = static_cast<float>(raw[i]) * scale;
  }
  return frame;
}

void write_pgm8(const std::filesystem::path& path, int width, int height,
                const std::vector<std::uint8_t>& pixels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "P5\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  if (!out) throw std::runtime_error("short write to " + path.string());
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& dir) {
  const std::filesystem::path manifest = dir / kManifestName;
  std::ifstream in(manifest);
  if (!in) throw std::runtime_error("missing manifest " + manifest.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    std::istringstream ls(line);
    ManifestEntry e;
    if (!(ls >> e.filename >> e.timestamp_us)) {
      throw std::runtime_error(manifest.string() + ":" + std::to_string(line_number) +
                               ": expected '<filename> <timestamp_us>'");
    }
    if (!entries.empty() && e.timestamp_us <= entries.back().timestamp_us) {
      throw std::runtime_error(manifest.string() + ":" + std::to_string(line_number) +
                               ": timestamps must be strictly increasing");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_frame_dir(const std::filesystem::path& dir, const std::vector<LuminanceFrame>& frames) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / kManifestName);
  if (!manifest) throw std::runtime_error("cannot write manifest in " + dir.string());
  char name[32];
  for (std::size_t i = 0; i < frames.size(); ++i) {
    std::snprintf(name, sizeof(name), "frame_%05zu.pgm", i);
    write_pgm16(dir / name, frames[i]);
    manifest << name << " " << frames[i].timestamp_us << "\n";
  }
}

DirFrameSequence::DirFrameSequence(const std::filesystem::path& dir)
    : dir_(dir), entries_(read_manifest(dir)) {
  if (entries_.empty()) {
    throw std::runtime_error("manifest in " + dir.string() + " lists no frames");
  }
  const LuminanceFrame first = read_pgm16(dir_ / entries_.front().filename);
  width_ = first.width;
  height_ = first.height;
}

LuminanceFrame DirFrameSequence::frame(std::size_t index) {
  const ManifestEntry& e = entries_.at(index);
  LuminanceFrame f = read_pgm16(dir_ / e.filename);
  f.timestamp_us = e.timestamp_us;
  if (f.width != width_ || f.height != height_) {
    throw std::runtime_error(e.filename + ": frame dimensions differ from the first frame");
  }
  return f;
}

}  // namespace ejecta::render
