#include <doctest.h>

#include <algorithm>
#include <random>

#include "ejecta/evio.hpp"
#include "test_oracles.hpp"

using namespace ejecta;
using evio::Event;
using evio::EventStream;
using evio::ParseError;

namespace {

EventStream random_stream(std::mt19937_64& rng, int width, int height, int count) {
  EventStream stream;
  stream.width = width;
  stream.height = height;
  std::uniform_int_distribution<std::uint64_t> time(0, 500000);
  std::uniform_int_distribution<int> px(0, width - 1);
  std::uniform_int_distribution<int> py(0, height - 1);
  std::uniform_int_distribution<int> pol(0, 1);
  for (int i = 0; i < count; ++i) {
    stream.events.push_back({time(rng), std::uint16_t(px(rng)), std::uint16_t(py(rng)),
                             std::uint8_t(pol(rng))});
  }
  std::sort(stream.events.begin(), stream.events.end(), evio::event_less);
  return stream;
}

}  // namespace

TEST_CASE("the EVT1 record layout is bit exact") {
  EventStream stream;
  stream.width = 100;
  stream.height = 100;
  stream.events.push_back({33333, 12, 7, 1});
  const auto bytes = evio::write_evt1(stream);
  REQUIRE(bytes.size() == evio::kEvt1HeaderSize + evio::kEvt1RecordSize);

  const std::vector<std::uint8_t> header = {'E', 'V', 'T', '1', 0x01, 0x00, 0x64, 0x00,
                                            0x64, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00,
                                            0x00, 0x00, 0x00, 0x00};
  CHECK(std::equal(header.begin(), header.end(), bytes.begin()));

  // 33333 = 0x8235 little-endian, then x=12, y=7, p=1, three reserved zeros
  const std::vector<std::uint8_t> record = {0x35, 0x82, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
                                            0x0C, 0x00, 0x07, 0x00, 0x01, 0x00, 0x00, 0x00};
  CHECK(std::equal(record.begin(), record.end(), bytes.begin() + evio::kEvt1HeaderSize));

  const EventStream back = evio::read_evt1(bytes);
  CHECK(back.width == 100);
  CHECK(back.height == 100);
  REQUIRE(back.events.size() == 1);
  CHECK(back.events[0] == stream.events[0]);
}

TEST_CASE("an empty stream is just the header") {
  EventStream stream;
  stream.width = 100;
  stream.height = 100;
  const auto bytes = evio::write_evt1(stream);
  CHECK(bytes.size() == evio::kEvt1HeaderSize);
  const EventStream back = evio::read_evt1(bytes);
  CHECK(back.width == 100);
  CHECK(back.events.empty());
}

TEST_CASE("evt1 parse failures are distinct") {
  EventStream stream;
  stream.width = 100;
  stream.height = 100;
  stream.events.push_back({10, 5, 5, 1});
  auto bytes = evio::write_evt1(stream);

  SUBCASE("bad magic") {
    bytes[3] = '0';
    try {
      evio::read_evt1(bytes);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.kind == ParseError::Kind::BadMagic);
    }
  }
  SUBCASE("bad version") {
    bytes[4] = 9;
    try {
      evio::read_evt1(bytes);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.kind == ParseError::Kind::BadVersion);
    }
  }
  SUBCASE("truncated payload") {
    bytes.pop_back();
    try {
      evio::read_evt1(bytes);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.kind == ParseError::Kind::Truncated);
    }
  }
  SUBCASE("truncated header") {
    bytes.resize(10);
    try {
      evio::read_evt1(bytes);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.kind == ParseError::Kind::Truncated);
    }
  }
  SUBCASE("coordinate out of bounds") {
    bytes[evio::kEvt1HeaderSize + 8] = 0xC8;  // x = 200 on a 100-wide sensor
    try {
      evio::read_evt1(bytes);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.kind == ParseError::Kind::OutOfBounds);
    }
  }
  SUBCASE("unsorted timestamps") {
    EventStream two = stream;
    two.events.push_back({5, 1, 1, 0});
    auto raw = evio::write_evt1(stream);  // valid single event
    // append an earlier record manually
    std::vector<std::uint8_t> extra = {0x05, 0, 0, 0, 0, 0, 0, 0, 0x01, 0, 0x01, 0, 0x00,
                                       0, 0, 0};
    raw.insert(raw.end(), extra.begin(), extra.end());
    raw[12] = 2;  // event_count = 2
    try {
      evio::read_evt1(raw);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.kind == ParseError::Kind::Unsorted);
    }
  }
}

TEST_CASE("evt1 round-trip is the identity on random streams") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const EventStream stream = random_stream(rng, 640, 480, trial * 7);
    const EventStream back = evio::read_evt1(evio::write_evt1(stream));
    REQUIRE(back.events.size() == stream.events.size());
    CHECK(back.width == stream.width);
    CHECK(back.height == stream.height);
    for (std::size_t i = 0; i < stream.events.size(); ++i) {
      CHECK(back.events[i] == stream.events[i]);
    }
  }
}

TEST_CASE("csv round-trip and diagnostics") {
  EventStream stream;
  stream.width = 100;
  stream.height = 100;
  stream.events.push_back({33333, 12, 7, 1});
  const std::string text = evio::write_csv(stream);
  CHECK(text == "t,x,y,p\n33333,12,7,1\n");

  SUBCASE("round-trip identity on random streams") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 30; ++trial) {
      const EventStream s = random_stream(rng, 320, 200, trial * 11);
      const EventStream back = evio::read_csv(evio::write_csv(s), 320, 200);
      REQUIRE(back.events.size() == s.events.size());
      for (std::size_t i = 0; i < s.events.size(); ++i) CHECK(back.events[i] == s.events[i]);
    }
  }
  SUBCASE("header-only text yields an empty stream") {
    const EventStream empty = evio::read_csv("t,x,y,p\n", 10, 10);
    CHECK(empty.events.empty());
  }
  SUBCASE("negative coordinate reported with its line number") {
    try {
      evio::read_csv("t,x,y,p\n5,-1,0,1\n", 10, 10);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.kind == ParseError::Kind::OutOfBounds);
      CHECK(e.line == 2);
    }
  }
  SUBCASE("garbage line reported with its line number") {
    try {
      evio::read_csv("t,x,y,p\n1,2,3,1\nbanana\n", 10, 10);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.kind == ParseError::Kind::Malformed);
      CHECK(e.line == 3);
    }
  }
}

TEST_CASE("accumulate covers the stream with half-open windows") {
  EventStream stream;
  stream.width = 16;
  stream.height = 16;
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<std::uint64_t> time(0, 99999);
  std::uniform_int_distribution<int> coord(0, 15);
  for (int i = 0; i < 500; ++i) {
    stream.events.push_back({time(rng), std::uint16_t(coord(rng)), std::uint16_t(coord(rng)),
                             std::uint8_t(i % 2)});
  }
  std::sort(stream.events.begin(), stream.events.end(), evio::event_less);

  const auto frames = evio::accumulate(stream, 33333);
  CHECK(frames.size() == stream.events.back().t / 33333 + 1);
  std::uint64_t total = 0;
  for (const auto& f : frames) {
    for (std::uint32_t v : f.on_counts) total += v;
    for (std::uint32_t v : f.off_counts) total += v;
  }
  CHECK(total == stream.events.size());

  SUBCASE("an event exactly on the boundary lands in the next frame") {
    EventStream one;
    one.width = 4;
    one.height = 4;
    one.events.push_back({33333, 1, 1, 1});
    const auto f = evio::accumulate(one, 33333, 0);
    REQUIRE(f.size() == 2);
    std::uint32_t frame0 = 0, frame1 = 0;
    for (std::uint32_t v : f[0].on_counts) frame0 += v;
    for (std::uint32_t v : f[1].on_counts) frame1 += v;
    CHECK(frame0 == 0);
    CHECK(frame1 == 1);
  }
  SUBCASE("an empty stream produces no frames") {
    CHECK(evio::accumulate(EventStream{8, 8, {}}, 1000).empty());
  }
  SUBCASE("window conservation holds for random windows") {
    std::uniform_int_distribution<std::uint64_t> win(1, 50000);
    for (int trial = 0; trial < 20; ++trial) {
      const auto fs = evio::accumulate(stream, win(rng));
      std::uint64_t n = 0;
      for (const auto& f : fs) {
        for (std::uint32_t v : f.on_counts) n += v;
        for (std::uint32_t v : f.off_counts) n += v;
      }
      CHECK(n == stream.events.size());
    }
  }
}

TEST_CASE("event-frame rendering follows the majority rule") {
  evio::EventFrame frame;
  frame.width = 3;
  frame.height = 1;
  frame.on_counts = {3, 2, 0};
  frame.off_counts = {1, 2, 0};
  const auto img = evio::render_event_frame(frame);
  CHECK(img[0] == 255);  // on wins
  CHECK(img[1] == 128);  // tie
  CHECK(img[2] == 128);  // empty

  SUBCASE("only the sign of the difference matters") {
    evio::EventFrame scaled = frame;
    for (auto& v : scaled.on_counts) v *= 17;
    for (auto& v : scaled.off_counts) v *= 17;
    CHECK(evio::render_event_frame(scaled) == img);
  }
}
