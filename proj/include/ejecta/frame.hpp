#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace ejecta::render {

/// Timestamped grid of linear scene luminance in [0, 1], row-major.
struct LuminanceFrame {
  std::uint64_t timestamp_us = 0;
  int width = 0;
  int height = 0;
  std::vector<float> pixels;

  float at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  float& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

inline LuminanceFrame make_frame(int width, int height, float fill = 0.0f,
                                 std::uint64_t timestamp_us = 0) {
  LuminanceFrame f;
  f.timestamp_us = timestamp_us;
  f.width = width;
  f.height = height;
  f.pixels.assign(static_cast<std::size_t>(width) * height, fill);
  return f;
}

/// Sequential access to a frame sequence. Lets the emulator stream a
/// directory of files without holding the whole clip in memory.
class FrameSequence {
 public:
  virtual ~FrameSequence() = default;
  virtual std::size_t size() const = 0;
  virtual int width() const = 0;
  virtual int height() const = 0;
  virtual LuminanceFrame frame(std::size_t index) = 0;
};

/// In-memory adapter.
class VectorFrameSequence final : public FrameSequence {
 public:
  explicit VectorFrameSequence(std::vector<LuminanceFrame> frames) : frames_(std::move(frames)) {}

  std::size_t size() const override { return frames_.size(); }
  int width() const override { return frames_.empty() ? 0 : frames_.front().width; }
  int height() const override { return frames_.empty() ? 0 : frames_.front().height; }
  LuminanceFrame frame(std::size_t index) override { return frames_[index]; }

 private:
  std::vector<LuminanceFrame> frames_;
};

}  // namespace ejecta::render
