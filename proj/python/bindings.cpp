#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>
#include <cstring>

#include "ejecta/config.hpp"
#include "ejecta/dvs.hpp"
#include "ejecta/evio.hpp"
#include "ejecta/pipeline.hpp"
#include "ejecta/render.hpp"
#include "ejecta/scene.hpp"
#include "ejecta/track.hpp"

namespace py = pybind11;
using namespace ejecta;

namespace {

Vec3 to_vec3(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }
std::array<double, 3> from_vec3(const Vec3& v) { return {v.x, v.y, v.z}; }

py::tuple stream_to_arrays(const evio::EventStream& stream) {
  const py::ssize_t n = static_cast<py::ssize_t>(stream.events.size());
  py::array_t<std::uint64_t> t(n);
  py::array_t<std::uint16_t> x(n);
  py::array_t<std::uint16_t> y(n);
  py::array_t<std::uint8_t> p(n);
  auto* tp = t.mutable_data();
  auto* xp = x.mutable_data();
  auto* yp = y.mutable_data();
  auto* pp = p.mutable_data();
  for (py::ssize_t i = 0; i < n; ++i) {
    const evio::Event& e = stream.events[i];
    tp[i] = e.t;
    xp[i] = e.x;
    yp[i] = e.y;
    pp[i] = e.p;
  }
  return py::make_tuple(t, x, y, p);
}

evio::EventStream arrays_to_stream(py::array_t<std::uint64_t> t, py::array_t<std::uint16_t> x,
                                   py::array_t<std::uint16_t> y, py::array_t<std::uint8_t> p,
                                   int width, int height) {
  const auto tb = t.unchecked<1>();
  const auto xb = x.unchecked<1>();
  const auto yb = y.unchecked<1>();
  const auto pb = p.unchecked<1>();
  if (tb.shape(0) != xb.shape(0) || tb.shape(0) != yb.shape(0) || tb.shape(0) != pb.shape(0)) {
    throw std::invalid_argument("event arrays must share one length");
  }
  evio::EventStream stream;
  stream.width = width;
  stream.height = height;
  stream.events.resize(static_cast<std::size_t>(tb.shape(0)));
  for (py::ssize_t i = 0; i < tb.shape(0); ++i) {
    stream.events[i] = {tb(i), xb(i), yb(i), pb(i)};
  }
  evio::validate(stream);
  return stream;
}

std::vector<render::LuminanceFrame> arrays_to_frames(
    py::array_t<float, py::array::c_style | py::array::forcecast> frames,
    py::array_t<std::uint64_t> timestamps) {
  const auto fb = frames.unchecked<3>();
  const auto ts = timestamps.unchecked<1>();
  if (fb.shape(0) != ts.shape(0)) {
    throw std::invalid_argument("frames and timestamps must share one length");
  }
  std::vector<render::LuminanceFrame> out;
  out.reserve(static_cast<std::size_t>(fb.shape(0)));
  for (py::ssize_t k = 0; k < fb.shape(0); ++k) {
    render::LuminanceFrame f = render::make_frame(static_cast<int>(fb.shape(2)),
                                                  static_cast<int>(fb.shape(1)), 0.0f, ts(k));
    std::memcpy(f.pixels.data(), fb.data(k, 0, 0), f.pixels.size() * sizeof(float));
    out.push_back(std::move(f));
  }
  return out;
}

py::tuple frames_to_arrays(const std::vector<render::LuminanceFrame>& frames) {
  const py::ssize_t n = static_cast<py::ssize_t>(frames.size());
  const py::ssize_t h = n > 0 ? frames.front().height : 0;
  const py::ssize_t w = n > 0 ? frames.front().width : 0;
  py::array_t<float> pixels({n, h, w});
  py::array_t<std::uint64_t> ts(n);
  for (py::ssize_t k = 0; k < n; ++k) {
    std::memcpy(pixels.mutable_data(k, 0, 0), frames[k].pixels.data(),
                frames[k].pixels.size() * sizeof(float));
    ts.mutable_data()[k] = frames[k].timestamp_us;
  }
  return py::make_tuple(pixels, ts);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "asteroid-ejecta event-camera simulation and tracking toolkit";
  m.attr("__version__") = "0.1.0";

  py::class_<scene::CameraModel>(m, "CameraModel")
      .def(py::init<int, int, double>(), py::arg("width"), py::arg("height"),
           py::arg("hfov_rad"))
      .def_readonly("width", &scene::CameraModel::width)
      .def_readonly("height", &scene::CameraModel::height)
      .def_readonly("hfov_rad", &scene::CameraModel::hfov_rad)
      .def_readonly("focal_px", &scene::CameraModel::focal_px)
      .def_readonly("cx", &scene::CameraModel::cx)
      .def_readonly("cy", &scene::CameraModel::cy);

  m.def(
      "propagate",
      [](const std::array<double, 3>& position, const std::array<double, 3>& velocity, double mu,
         double dt, double asteroid_radius) {
        scene::ParticleState s{to_vec3(position), to_vec3(velocity), 1.0, true};
        const scene::ParticleState next = scene::propagate(s, mu, dt, asteroid_radius);
        return py::make_tuple(from_vec3(next.position), from_vec3(next.velocity), next.alive);
      },
      py::arg("position"), py::arg("velocity"), py::arg("mu"), py::arg("dt"),
      py::arg("asteroid_radius") = 0.0,
      "One RK4 step of two-body motion; returns (position, velocity, alive).");

  m.def(
      "project",
      [](const std::array<double, 3>& point, const scene::CameraModel& camera,
         const std::array<double, 3>& camera_position,
         const std::array<double, 3>& camera_pointing,
         const std::array<double, 3>& up) -> py::object {
        const auto proj = scene::project(to_vec3(point), camera, to_vec3(camera_position),
                                         to_vec3(camera_pointing), to_vec3(up));
        if (!proj) return py::none();
        return py::make_tuple(proj->u, proj->v, proj->depth);
      },
      py::arg("point"), py::arg("camera"), py::arg("camera_position"),
      py::arg("camera_pointing"), py::arg("up") = std::array<double, 3>{0.0, 0.0, 1.0},
      "Pinhole projection to (u, v, depth); None when behind the camera.");

  m.def("angular_radius_px", &scene::angular_radius_px, py::arg("diameter_m"), py::arg("range_m"),
        py::arg("camera"));

  m.def("log_intensity", &dvs::log_intensity, py::arg("intensity"), py::arg("i_floor"));

  py::class_<dvs::DvsConfig>(m, "DvsConfig")
      .def(py::init<>())
      .def_readwrite("theta_on", &dvs::DvsConfig::theta_on)
      .def_readwrite("theta_off", &dvs::DvsConfig::theta_off)
      .def_readwrite("refractory_us", &dvs::DvsConfig::refractory_us)
      .def_readwrite("i_floor", &dvs::DvsConfig::i_floor)
      .def_readwrite("leak_rate_hz", &dvs::DvsConfig::leak_rate_hz)
      .def_readwrite("shot_rate_hz", &dvs::DvsConfig::shot_rate_hz)
      .def_readwrite("hot_pixel_fraction", &dvs::DvsConfig::hot_pixel_fraction)
      .def_readwrite("hot_pixel_rate_hz", &dvs::DvsConfig::hot_pixel_rate_hz)
      .def_readwrite("seed", &dvs::DvsConfig::seed)
      .def("no_noise", &dvs::DvsConfig::no_noise);

  m.def(
      "emulate",
      [](py::array_t<float, py::array::c_style | py::array::forcecast> frames,
         py::array_t<std::uint64_t> timestamps, const dvs::DvsConfig& cfg, int workers) {
        const evio::EventStream stream = dvs::emulate(arrays_to_frames(frames, timestamps), cfg,
                                                      workers);
        return stream_to_arrays(stream);
      },
      py::arg("frames"), py::arg("timestamps_us"), py::arg("config") = dvs::DvsConfig{},
      py::arg("workers") = 1,
      "Convert luminance frames (n, h, w) to an event stream; returns (t, x, y, p).");

  m.def(
      "spinning_dot",
      [](double radius_px, double period_s, double frame_rate, int frame_count, int width,
         int height) {
        return frames_to_arrays(render::spinning_dot_sequence(radius_px, period_s, frame_rate,
                                                              frame_count, width, height));
      },
      py::arg("radius_px") = 60.0, py::arg("period_s") = 1.0, py::arg("frame_rate") = 120.0,
      py::arg("frame_count") = 121, py::arg("width") = 0, py::arg("height") = 0,
      "Black dot on a white disk; returns (frames, timestamps_us).");

  py::class_<scene::ScenarioConfig>(m, "ScenarioConfig")
      .def_readonly("frame_count", &scene::ScenarioConfig::frame_count)
      .def_readonly("frame_rate", &scene::ScenarioConfig::frame_rate)
      .def_readonly("camera_width", &scene::ScenarioConfig::camera_width)
      .def_readonly("camera_height", &scene::ScenarioConfig::camera_height)
      .def_readonly("seed", &scene::ScenarioConfig::seed)
      .def_property_readonly("particle_count", [](const scene::ScenarioConfig& c) {
        return c.particles.size();
      });

  m.def(
      "load_scenario",
      [](const std::string& path) { return scenario_from_config(ConfigTree::parse_file(path)); },
      py::arg("path"));

  m.def("single_particle_scenario", &cli::single_particle_scenario);

  m.def(
      "render_sequence",
      [](const scene::ScenarioConfig& cfg) { return frames_to_arrays(render::render_sequence(cfg)); },
      py::arg("scenario"), "Render all scenario frames; returns (frames, timestamps_us).");

  m.def(
      "write_evt1",
      [](const std::string& path, int width, int height, py::array_t<std::uint64_t> t,
         py::array_t<std::uint16_t> x, py::array_t<std::uint16_t> y,
         py::array_t<std::uint8_t> p) {
        evio::write_evt1_file(path, arrays_to_stream(t, x, y, p, width, height));
      },
      py::arg("path"), py::arg("width"), py::arg("height"), py::arg("t"), py::arg("x"),
      py::arg("y"), py::arg("p"));

  m.def(
      "read_evt1",
      [](const std::string& path) {
        const evio::EventStream stream = evio::read_evt1_file(path);
        return py::make_tuple(stream.width, stream.height, stream_to_arrays(stream));
      },
      py::arg("path"), "Returns (width, height, (t, x, y, p)).");

  m.def(
      "accumulate",
      [](py::array_t<std::uint64_t> t, py::array_t<std::uint16_t> x,
         py::array_t<std::uint16_t> y, py::array_t<std::uint8_t> p, int width, int height,
         std::uint64_t window_us, std::uint64_t t0) {
        const auto frames =
            evio::accumulate(arrays_to_stream(t, x, y, p, width, height), window_us, t0);
        const py::ssize_t n = static_cast<py::ssize_t>(frames.size());
        py::array_t<std::uint32_t> on({n, py::ssize_t(height), py::ssize_t(width)});
        py::array_t<std::uint32_t> off({n, py::ssize_t(height), py::ssize_t(width)});
        py::array_t<std::uint64_t> starts(n);
        for (py::ssize_t i = 0; i < n; ++i) {
          std::memcpy(on.mutable_data(i, 0, 0), frames[i].on_counts.data(),
                      frames[i].on_counts.size() * sizeof(std::uint32_t));
          std::memcpy(off.mutable_data(i, 0, 0), frames[i].off_counts.data(),
                      frames[i].off_counts.size() * sizeof(std::uint32_t));
          starts.mutable_data()[i] = frames[i].t_start;
        }
        return py::make_tuple(on, off, starts);
      },
      py::arg("t"), py::arg("x"), py::arg("y"), py::arg("p"), py::arg("width"),
      py::arg("height"), py::arg("window_us"), py::arg("t0") = 0,
      "Bin events; returns (on_counts, off_counts, window_starts_us).");

  m.def(
      "render_event_frame",
      [](py::array_t<std::uint32_t, py::array::c_style | py::array::forcecast> on,
         py::array_t<std::uint32_t, py::array::c_style | py::array::forcecast> off) {
        const auto ob = on.unchecked<2>();
        const auto fb = off.unchecked<2>();
        evio::EventFrame frame;
        frame.height = static_cast<int>(ob.shape(0));
        frame.width = static_cast<int>(ob.shape(1));
        const std::size_t npx = static_cast<std::size_t>(frame.width) * frame.height;
        frame.on_counts.resize(npx);
        frame.off_counts.resize(npx);
        std::memcpy(frame.on_counts.data(), ob.data(0, 0), npx * sizeof(std::uint32_t));
        std::memcpy(frame.off_counts.data(), fb.data(0, 0), npx * sizeof(std::uint32_t));
        const std::vector<std::uint8_t> img = evio::render_event_frame(frame);
        py::array_t<std::uint8_t> out({py::ssize_t(frame.height), py::ssize_t(frame.width)});
        std::memcpy(out.mutable_data(0, 0), img.data(), img.size());
        return out;
      },
      py::arg("on_counts"), py::arg("off_counts"));

  m.def(
      "denoise",
      [](py::array_t<std::uint64_t> t, py::array_t<std::uint16_t> x,
         py::array_t<std::uint16_t> y, py::array_t<std::uint8_t> p, int width, int height,
         int radius_px, std::uint64_t window_us, int min_neighbors) {
        return stream_to_arrays(track::denoise(arrays_to_stream(t, x, y, p, width, height),
                                               radius_px, window_us, min_neighbors));
      },
      py::arg("t"), py::arg("x"), py::arg("y"), py::arg("p"), py::arg("width"),
      py::arg("height"), py::arg("radius_px"), py::arg("window_us"), py::arg("min_neighbors"));

  py::class_<track::TrackParams>(m, "TrackParams")
      .def(py::init<>())
      .def_readwrite("window_us", &track::TrackParams::window_us)
      .def_readwrite("eps_px", &track::TrackParams::eps_px)
      .def_readwrite("min_cluster_size", &track::TrackParams::min_cluster_size)
      .def_readwrite("gate_px", &track::TrackParams::gate_px)
      .def_readwrite("confirm_hits", &track::TrackParams::confirm_hits)
      .def_readwrite("max_misses", &track::TrackParams::max_misses)
      .def_readwrite("denoise_min_neighbors", &track::TrackParams::denoise_min_neighbors)
      .def_readwrite("denoise_radius_px", &track::TrackParams::denoise_radius_px)
      .def_readwrite("denoise_window_us", &track::TrackParams::denoise_window_us)
      .def_readwrite("velocity_fit_count", &track::TrackParams::velocity_fit_count);

  m.def(
      "track_stream",
      [](py::array_t<std::uint64_t> t, py::array_t<std::uint16_t> x,
         py::array_t<std::uint16_t> y, py::array_t<std::uint8_t> p, int width, int height,
         const track::TrackParams& params) {
        const auto tracks =
            track::track_stream(arrays_to_stream(t, x, y, p, width, height), params);
        py::list out;
        for (const track::Track& tr : tracks) {
          const py::ssize_t n = static_cast<py::ssize_t>(tr.detections.size());
          py::array_t<std::uint64_t> dt(n);
          py::array_t<double> du(n);
          py::array_t<double> dv(n);
          py::array_t<int> dc(n);
          for (py::ssize_t i = 0; i < n; ++i) {
            dt.mutable_data()[i] = tr.detections[i].t;
            du.mutable_data()[i] = tr.detections[i].u;
            dv.mutable_data()[i] = tr.detections[i].v;
            dc.mutable_data()[i] = tr.detections[i].event_count;
          }
          py::dict d;
          d["id"] = tr.id;
          d["status"] =
              tr.status == track::TrackStatus::Terminated ? "terminated" : "confirmed";
          d["t"] = dt;
          d["u"] = du;
          d["v"] = dv;
          d["event_count"] = dc;
          out.append(d);
        }
        return out;
      },
      py::arg("t"), py::arg("x"), py::arg("y"), py::arg("p"), py::arg("width"),
      py::arg("height"), py::arg("params") = track::TrackParams{},
      "Window-based detect + track; returns confirmed tracks as dicts.");
}
