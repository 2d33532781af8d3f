#include "ejecta/evio.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace ejecta::evio {

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    v >>= 8;
  }
}

std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (std::uint16_t(p[1]) << 8));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

void validate(const EventStream& stream) {
  const Event* prev = nullptr;
  for (const Event& e : stream.events) {
    if (e.x >= stream.width || e.y >= stream.height) {
      throw ParseError(ParseError::Kind::OutOfBounds,
                       "event coordinate (" + std::to_string(e.x) + "," + std::to_string(e.y) +
                           ") outside " + std::to_string(stream.width) + "x" +
                           std::to_string(stream.height));
    }
    if (prev != nullptr && event_less(e, *prev)) {
      throw ParseError(ParseError::Kind::Unsorted,
                       "events not sorted by (t, y, x, p) near t=" + std::to_string(e.t));
    }
    prev = &e;
  }
}

std::vector<std::uint8_t> write_evt1(const EventStream& stream) {
  validate(stream);
  std::vector<std::uint8_t> out;
  out.reserve(kEvt1HeaderSize + stream.events.size() * kEvt1RecordSize);
  out.insert(out.end(), {'E', 'V', 'T', '1'});
  put_u16(out, 1);
  put_u16(out, static_cast<std::uint16_t>(stream.width));
  put_u16(out, static_cast<std::uint16_t>(stream.height));
  put_u16(out, 0);
  put_u64(out, stream.events.size());
  for (const Event& e : stream.events) {
    put_u64(out, e.t);
    put_u16(out, e.x);
    put_u16(out, e.y);
    out.push_back(e.p);
    out.insert(out.end(), {0, 0, 0});
  }
  return out;
}

EventStream read_evt1(const std::uint8_t* data, std::size_t size) {
  if (size < kEvt1HeaderSize) {
    throw ParseError(ParseError::Kind::Truncated, "EVT1 header truncated");
  }
  if (std::memcmp(data, "EVT1", 4) != 0) {
    throw ParseError(ParseError::Kind::BadMagic, "not an EVT1 file (bad magic)");
  }
  const std::uint16_t version = get_u16(data + 4);
  if (version != 1) {
    throw ParseError(ParseError::Kind::BadVersion,
                     "unsupported EVT1 version " + std::to_string(version));
  }
  EventStream stream;
  stream.width = get_u16(data + 6);
  stream.height = get_u16(data + 8);
  const std::uint64_t count = get_u64(data + 12);
  if (size < kEvt1HeaderSize + count * kEvt1RecordSize) {
    throw ParseError(ParseError::Kind::Truncated,
                     "EVT1 payload truncated: header promises " + std::to_string(count) +
                         " events");
  }
  stream.events.resize(count);
  const std::uint8_t* p = data + kEvt1HeaderSize;
  for (std::uint64_t i = 0; i < count; ++i, p += kEvt1RecordSize) {
    Event& e = stream.events[i];
    e.t = get_u64(p);
    e.x = get_u16(p + 8);
    e.y = get_u16(p + 10);
    e.p = p[12];
  }
  validate(stream);
  return stream;
}

EventStream read_evt1(const std::vector<std::uint8_t>& bytes) {
  return read_evt1(bytes.data(), bytes.size());
}

void write_evt1_file(const std::filesystem::path& path, const EventStream& stream) {
  const std::vector<std::uint8_t> bytes = write_evt1(stream);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write to " + path.string());
}

EventStream read_evt1_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return read_evt1(bytes);
}

std::string write_csv(const EventStream& stream) {
  validate(stream);
  std::string out = "t,x,y,p\n";
  char buf[64];
  for (const Event& e : stream.events) {
    const int n = std::snprintf(buf, sizeof(buf), "%llu,%u,%u,%u\n",
                                static_cast<unsigned long long>(e.t), unsigned(e.x), unsigned(e.y),
                                unsigned(e.p));
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

namespace {

// Parses one signed field; fields must be plain decimal integers.
bool parse_field(const char*& p, const char* end, long long& value) {
  auto [next, ec] = std::from_chars(p, end, value);
  if (ec != std::errc()) return false;
  p = next;
  return true;
}

}  // namespace

EventStream read_csv(const std::string& text, int width, int height) {
  EventStream stream;
  stream.width = width;
  stream.height = height;
  std::istringstream in(text);
  std::string line;
  std::size_t line_number = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != "t,x,y,p") {
        throw ParseError(ParseError::Kind::Malformed, "missing 't,x,y,p' header", line_number);
      }
      saw_header = true;
      continue;
    }
    const char* p = line.data();
    const char* end = p + line.size();
    long long fields[4];
    for (int i = 0; i < 4; ++i) {
      if (i > 0) {
        if (p == end || *p != ',') {
          throw ParseError(ParseError::Kind::Malformed, "malformed event line", line_number);
        }
        ++p;
      }
      if (!parse_field(p, end, fields[i])) {
        throw ParseError(ParseError::Kind::Malformed, "malformed event line", line_number);
      }
    }
    if (p != end) {
      throw ParseError(ParseError::Kind::Malformed, "trailing characters on event line",
                       line_number);
    }
    if (fields[0] < 0 || fields[1] < 0 || fields[1] >= width || fields[2] < 0 ||
        fields[2] >= height) {
      throw ParseError(ParseError::Kind::OutOfBounds, "event out of bounds", line_number);
    }
    if (fields[3] != 0 && fields[3] != 1) {
      throw ParseError(ParseError::Kind::Malformed, "polarity must be 0 or 1", line_number);
    }
    Event e;
    e.t = static_cast<std::uint64_t>(fields[0]);
    e.x = static_cast<std::uint16_t>(fields[1]);
    e.y = static_cast<std::uint16_t>(fields[2]);
    e.p = static_cast<std::uint8_t>(fields[3]);
    if (!stream.events.empty() && event_less(e, stream.events.back())) {
      throw ParseError(ParseError::Kind::Unsorted, "events not sorted by (t, y, x, p)",
                       line_number);
    }
    stream.events.push_back(e);
  }
  if (!saw_header) {
    throw ParseError(ParseError::Kind::Malformed, "missing 't,x,y,p' header", 1);
  }
  return stream;
}

void write_csv_file(const std::filesystem::path& path, const EventStream& stream) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << write_csv(stream);
}

EventStream read_csv_file(const std::filesystem::path& path, int width, int height) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return read_csv(buf.str(), width, height);
}

std::vector<EventFrame> accumulate(const EventStream& stream, std::uint64_t window_us,
                                   std::uint64_t t0) {
  if (window_us == 0) throw std::invalid_argument("accumulate: window_us must be > 0");
  std::uint64_t t_max = 0;
  bool any = false;
  for (const Event& e : stream.events) {
    if (e.t >= t0) {
      t_max = std::max(t_max, e.t);
      any = true;
    }
  }
  std::vector<EventFrame> frames;
  if (!any) return frames;

  const std::uint64_t n = (t_max - t0) / window_us + 1;
  frames.resize(n);
  const std::size_t npx = static_cast<std::size_t>(stream.width) * stream.height;
  for (std::uint64_t i = 0; i < n; ++i) {
    frames[i].t_start = t0 + i * window_us;
    frames[i].t_end = t0 + (i + 1) * window_us;
    frames[i].width = stream.width;
    frames[i].height = stream.height;
    frames[i].on_counts.assign(npx, 0);
    frames[i].off_counts.assign(npx, 0);
  }
  for (const Event& e : stream.events) {
    if (e.t < t0) continue;
    const std::uint64_t i = (e.t - t0) / window_us;
    const std::size_t idx = static_cast<std::size_t>(e.y) * stream.width + e.x;
    if (e.p) {
      ++frames[i].on_counts[idx];
    } else {
      ++frames[i].off_counts[idx];
    }
  }
  return frames;
}

std::vector<std::uint8_t> render_event_frame(const EventFrame& frame) {
  const std::size_t npx = static_cast<std::size_t>(frame.width) * frame.height;
  std::vector<std::uint8_t> img(npx, 128);
  for (std::size_t i = 0; i < npx; ++i) {
    if (frame.on_counts[i] > frame.off_counts[i]) {
      img[i] = 255;
    } else if (frame.off_counts[i] > frame.on_counts[i]) {
      img[i] = 0;
    }
  }
  return img;
}

}  // namespace ejecta::evio
