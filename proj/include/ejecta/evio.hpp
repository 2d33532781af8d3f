#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace ejecta::evio {

/// One DVS event. Polarity is 1 for ON (brightness increase), 0 for OFF.
struct Event {
  std::uint64_t t = 0;  // microseconds from sequence start
  std::uint16_t x = 0;  // pixel column
  std::uint16_t y = 0;  // pixel row
  std::uint8_t p = 0;   // 1 = ON, 0 = OFF
};

inline bool operator==(const Event& a, const Event& b) {
  return a.t == b.t && a.x == b.x && a.y == b.y && a.p == b.p;
}

/// Total order for streams: (t, y, x, p) ascending. Every producer sorts
/// with this so outputs are byte-reproducible.
inline bool event_less(const Event& a, const Event& b) {
  if (a.t != b.t) return a.t < b.t;
  if (a.y != b.y) return a.y < b.y;
  if (a.x != b.x) return a.x < b.x;
  return a.p < b.p;
}

struct EventStream {
  int width = 0;
  int height = 0;
  std::vector<Event> events;
};

struct ParseError : std::runtime_error {
  enum class Kind { BadMagic, BadVersion, Truncated, OutOfBounds, Unsorted, Malformed };

  ParseError(Kind k, const std::string& msg, std::size_t line_number = 0)
      : std::runtime_error(msg), kind(k), line(line_number) {}

  Kind kind;
  std::size_t line;  // 1-based; 0 when not line oriented
};

/// Throws ParseError if coordinates fall outside (width, height) or the
/// stream violates the (t, y, x, p) ordering.
void validate(const EventStream& stream);

// EVT1 container, little-endian throughout:
//   "EVT1"  u16 version=1  u16 width  u16 height  u16 reserved=0  u64 count
// followed by count 16-byte records:
//   u64 t_us  u16 x  u16 y  u8 p  u8[3] reserved=0
inline constexpr std::size_t kEvt1HeaderSize = 20;
inline constexpr std::size_t kEvt1RecordSize = 16;

std::vector<std::uint8_t> write_evt1(const EventStream& stream);
EventStream read_evt1(const std::uint8_t* data, std::size_t size);
EventStream read_evt1(const std::vector<std::uint8_t>& bytes);

void write_evt1_file(const std::filesystem::path& path, const EventStream& stream);
EventStream read_evt1_file(const std::filesystem::path& path);

// CSV interchange: header "t,x,y,p" then one event per line. The text does
// not carry sensor dimensions, so readers pass them in; validation matches
// EVT1.
std::string write_csv(const EventStream& stream);
EventStream read_csv(const std::string& text, int width, int height);

void write_csv_file(const std::filesystem::path& path, const EventStream& stream);
EventStream read_csv_file(const std::filesystem::path& path, int width, int height);

/// Per-window ON/OFF count grids.
struct EventFrame {
  std::uint64_t t_start = 0;
  std::uint64_t t_end = 0;
  int width = 0;
  int height = 0;
  std::vector<std::uint32_t> on_counts;   // row-major width*height
  std::vector<std::uint32_t> off_counts;
};

/// Bins events into frames covering [t0 + i*window_us, t0 + (i+1)*window_us).
/// Frames run until the last event is covered; events before t0 are dropped.
/// An empty stream (or one entirely before t0) yields no frames.
std::vector<EventFrame> accumulate(const EventStream& stream, std::uint64_t window_us,
                                   std::uint64_t t0 = 0);

/// 8-bit visualization: 128 where no events or a tie, 255 where ON events
/// dominate, 0 where OFF events dominate. Row-major width*height.
std::vector<std::uint8_t> render_event_frame(const EventFrame& frame);

}  // namespace ejecta::evio
