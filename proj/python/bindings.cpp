#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "reactsim/app.hpp"
#include "reactsim/errors.hpp"
#include "reactsim/initstate.hpp"
#include "reactsim/io.hpp"
#include "reactsim/kinematics.hpp"
#include "reactsim/metrics.hpp"
#include "reactsim/raster.hpp"
#include "reactsim/scenarios.hpp"
#include "reactsim/svg.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace reactsim;

namespace {

py::dict to_dict(const io::Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

io::Json from_obj(const py::object& o) {
  if (py::isinstance<py::str>(o)) return io::parse_json(o.cast<std::string>(), "argument");
  return io::parse_json(py::module_::import("json").attr("dumps")(o).cast<std::string>(), "argument");
}

py::array_t<std::uint8_t> plane_array(const Grid& g, Channel c) {
  py::array_t<std::uint8_t> a({g.height_px, g.width_px});
  const auto p = g.plane(c);
  std::copy(p.begin(), p.end(), a.mutable_data());
  return a;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Closed-loop reactive traffic simulation";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::enum_<AgentKind>(m, "AgentKind")
      .value("vehicle", AgentKind::vehicle)
      .value("pedestrian", AgentKind::pedestrian)
      .value("cyclist", AgentKind::cyclist);
  py::enum_<Termination>(m, "Termination")
      .value("completed", Termination::completed)
      .value("ego_collision", Termination::ego_collision)
      .value("external", Termination::external);

  py::class_<Vec2>(m, "Vec2")
      .def(py::init<double, double>(), py::arg("x") = 0.0, py::arg("y") = 0.0)
      .def_readwrite("x", &Vec2::x)
      .def_readwrite("y", &Vec2::y)
      .def(py::self == py::self)
      .def("__repr__", [](const Vec2& v) { return "Vec2(" + io::format_double(v.x) + ", " + io::format_double(v.y) + ")"; });

  py::class_<Pose2>(m, "Pose2")
      .def(py::init<double, double, double>(), py::arg("x") = 0.0, py::arg("y") = 0.0, py::arg("yaw") = 0.0)
      .def_readwrite("x", &Pose2::x)
      .def_readwrite("y", &Pose2::y)
      .def_readwrite("yaw", &Pose2::yaw)
      .def(py::self == py::self)
      .def("__repr__", [](const Pose2& p) {
        return "Pose2(" + io::format_double(p.x) + ", " + io::format_double(p.y) + ", " + io::format_double(p.yaw) + ")";
      });

  py::class_<Extent>(m, "Extent")
      .def(py::init<double, double>(), py::arg("length") = 4.5, py::arg("width") = 2.0)
      .def_readwrite("length", &Extent::length)
      .def_readwrite("width", &Extent::width)
      .def(py::self == py::self);

  py::class_<Obb>(m, "Obb")
      .def(py::init([](double cx, double cy, double hx, double hy, double yaw) { return Obb{{cx, cy}, {hx, hy}, yaw}; }),
           py::arg("cx"), py::arg("cy"), py::arg("half_length"), py::arg("half_width"), py::arg("yaw") = 0.0)
      .def_readwrite("center", &Obb::center)
      .def_readwrite("half_extents", &Obb::half_extents)
      .def_readwrite("yaw", &Obb::yaw)
      .def("corners", &Obb::corners)
      .def("contains", &Obb::contains);

  py::class_<AgentState>(m, "AgentState")
      .def(py::init([](AgentId id, Pose2 pose, Extent extent, double speed, AgentKind kind, bool active) {
             return AgentState{id, pose, extent, speed, kind, active};
           }),
           py::arg("id") = 0, py::arg("pose") = Pose2{}, py::arg("extent") = Extent{}, py::arg("speed") = 0.0,
           py::arg("kind") = AgentKind::vehicle, py::arg("active") = true)
      .def_readwrite("id", &AgentState::id)
      .def_readwrite("pose", &AgentState::pose)
      .def_readwrite("extent", &AgentState::extent)
      .def_readwrite("speed", &AgentState::speed)
      .def_readwrite("kind", &AgentState::kind)
      .def_readwrite("active", &AgentState::active)
      .def("footprint", &AgentState::footprint)
      .def(py::self == py::self);

  py::class_<SimState>(m, "SimState")
      .def(py::init<>())
      .def_readwrite("step_index", &SimState::step_index)
      .def_readwrite("agents", &SimState::agents)
      .def_readwrite("ego_id", &SimState::ego_id)
      .def("agent", &SimState::agent, py::arg("id"))
      .def("ego", &SimState::ego)
      .def("to_json", [](const SimState& s) { return to_dict(io::state_to_json(s)); })
      .def_static("from_json", [](const py::object& o) { return io::state_from_json(from_obj(o)); })
      .def(py::self == py::self);

  py::class_<Episode>(m, "Episode")
      .def(py::init<>())
      .def_readwrite("dt", &Episode::dt)
      .def_readwrite("map_id", &Episode::map_id)
      .def_readwrite("states", &Episode::states)
      .def_readwrite("termination", &Episode::termination)
      .def("__len__", [](const Episode& e) { return e.states.size(); })
      .def("to_jsonl", &io::episode_to_jsonl)
      .def_static("from_jsonl", [](const std::string& text) { return io::episode_from_jsonl(text); })
      .def("save", [](const Episode& e, const fs::path& p) { io::save_episode(p, e); })
      .def_static("load", &io::load_episode)
      .def(py::self == py::self);

  py::class_<SemanticMap, std::shared_ptr<SemanticMap>>(m, "SemanticMap")
      .def_property_readonly("id", &SemanticMap::id)
      .def("lane_count", [](const SemanticMap& s) { return s.lanes().size(); })
      .def("to_json", [](const SemanticMap& s) { return to_dict(io::map_to_json(s)); })
      .def_static("from_json", [](const py::object& o) { return std::make_shared<SemanticMap>(io::map_from_json(from_obj(o))); })
      .def("save", [](const SemanticMap& s, const fs::path& p) { io::save_map(p, s); });

  m.def("straight_map", [](double length, int lanes) { return std::make_shared<SemanticMap>(straight_map(length, lanes)); },
        py::arg("length") = 300.0, py::arg("lanes") = 1);
  m.def("ring_map", [] { return std::make_shared<SemanticMap>(ring_map()); });
  m.def("intersection_map", [] { return std::make_shared<SemanticMap>(intersection_map()); });
  m.def("load_map", [](const fs::path& p) { return std::make_shared<SemanticMap>(io::load_map(p)); });

  m.def("obb_overlap", &obb_overlap, py::arg("a"), py::arg("b"));
  m.def("advance",
        [](const AgentState& a, double phi, double v, double dt, double phi_max) { return advance(a, {phi, v}, dt, phi_max); },
        py::arg("agent"), py::arg("phi"), py::arg("v"), py::arg("dt"), py::arg("phi_max") = kDefaultPhiMax);
  m.def(
      "fit_controls",
      [](const Pose2& from, const Pose2& to, double dt, double phi_max) {
        const Control c = fit_controls(from, to, dt, phi_max);
        return py::make_tuple(c.phi, c.v);
      },
      py::arg("from_pose"), py::arg("to_pose"), py::arg("dt"), py::arg("phi_max") = kDefaultPhiMax,
      "Returns (phi, v).");

  py::class_<Grid>(m, "Grid")
      .def_readonly("width_px", &Grid::width_px)
      .def_readonly("height_px", &Grid::height_px)
      .def_readonly("resolution", &Grid::resolution)
      .def_readonly("center", &Grid::center)
      .def("plane", [](const Grid& g, const std::string& name) {
        for (Channel c : kAllChannels) {
          if (to_string(c) == name) return plane_array(g, c);
        }
        throw DomainError("unknown channel '" + name + "'");
      },
      py::arg("channel"), "Channel as a (height, width) uint8 array: lanes, crosswalks, ego or agents.");
  m.def(
      "render",
      [](const SimState& s, const SemanticMap& map, const Pose2& center, double resolution, int size_px, double t) {
        return render(s, map, center, resolution, size_px, t);
      },
      py::arg("state"), py::arg("map"), py::arg("center"), py::arg("resolution") = 0.5, py::arg("size_px") = 224,
      py::arg("sim_time") = 0.0);
  m.def(
      "extract_agents",
      [](const Grid& g, const std::string& channel, int min_pixels) {
        Channel ch = Channel::agents;
        if (channel == "ego") ch = Channel::ego;
        else if (channel != "agents") throw DomainError("channel must be 'agents' or 'ego'");
        py::list out;
        for (const ExtractedAgent& a : extract_components(g, ch, min_pixels)) {
          out.append(py::dict(py::arg("centroid") = a.centroid, py::arg("bbox") = a.bbox,
                              py::arg("pixel_count") = a.pixel_count));
        }
        return out;
      },
      py::arg("grid"), py::arg("channel") = "agents", py::arg("min_pixels") = kDefaultMinPixels);
  m.def("state_from_raster", [](const Grid& g) { return state_from_raster(g); }, py::arg("grid"));

  m.def(
      "simulate",
      [](const py::object& config, const fs::path& base_dir) {
        const app::RunConfig cfg = app::parse_run_config(from_obj(config), base_dir);
        py::gil_scoped_release release;
        return app::simulate(cfg);
      },
      py::arg("config"), py::arg("base_dir") = ".",
      "Runs the episodes described by a RunConfig (dict or JSON text).");

  m.def("teacher_episode",
        [](const std::shared_ptr<SemanticMap>& map, std::uint64_t seed, int steps) { return teacher_episode(map, seed, steps); },
        py::arg("map"), py::arg("seed"), py::arg("horizon_steps") = 50);

  m.def(
      "displacement_error",
      [](const std::vector<Episode>& sims, const std::vector<Episode>& gts, const std::vector<double>& horizons) {
        return to_dict(io::to_json(displacement_error(sims, gts, horizons)));
      },
      py::arg("sims"), py::arg("gts"), py::arg("horizons") = kDefaultHorizons);

  m.def(
      "reactivity",
      [](const std::string& subject, int scenes, std::uint64_t seed) {
        const SemanticMap map = straight_map();
        StaticLeadSuiteConfig suite_cfg;
        suite_cfg.scenes = scenes;
        const auto suite = make_static_lead_suite(suite_cfg, seed, map);
        SimConfig sim;
        sim.horizon_steps = 50;
        sim.interrupt_on_ego_collision = false;
        const FollowParams follow;
        const SubjectFactory factory = [&](std::size_t, const SimState& scene) {
          if (subject == "log_replay") {
            return PolicyPtr(std::make_shared<LogReplayPolicy>(std::make_shared<Episode>(constant_speed_log(scene, map, sim))));
          }
          return app::make_policy(subject, follow, nullptr, std::nullopt);
        };
        return to_dict(io::to_json(reactivity(suite, factory, map, sim)));
      },
      py::arg("subject") = "reactive_follow", py::arg("scenes") = 100, py::arg("seed") = 0,
      "Static-lead reactivity of a named follower policy.");

  m.def(
      "planner_eval",
      [](const std::string& traffic, int fixtures, std::uint64_t seed) {
        const SemanticMap map = intersection_map();
        SimConfig cfg;
        cfg.horizon_steps = 50;
        const EgoPtr probe = stop_at_green_ego();
        const TrafficMode mode = traffic_mode_from_string(traffic);
        std::vector<Episode> eps, refs;
        for (int i = 0; i < fixtures; ++i) {
          const PlannerFixture f = make_intersection_fixture(map, hash_combine(seed, static_cast<std::uint64_t>(i)), cfg);
          refs.push_back(f.reference);
          eps.push_back(run_planner_probe(f, map, *probe, mode, cfg));
        }
        return to_dict(io::to_json(planner_eval(eps, refs)));
      },
      py::arg("traffic") = "reactive", py::arg("fixtures") = 20, py::arg("seed") = 7,
      "Planner events of the stop-at-green probe over generated intersection fixtures.");

  m.def(
      "train_bc",
      [](const std::vector<Episode>& episodes, const SemanticMap& map, const py::object& train) {
        io::Json doc = io::Json::object();
        if (!train.is_none()) doc["train"] = from_obj(train);
        const TrainConfig cfg = app::parse_run_config(doc).train;
        const auto samples = build_bc_dataset(episodes, map);
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = mlp_train(samples, cfg);
        }
        return py::make_tuple(to_dict(io::mlp_to_json(r.model)), r.initial_loss, r.epoch_loss);
      },
      py::arg("episodes"), py::arg("map"), py::arg("train") = py::none(),
      "Behavioral cloning; returns (weights, initial_loss, epoch_losses).");

  m.def("svg_frame", [](const Episode& e, std::size_t offset, const SemanticMap* map) { return svg_frame(e, offset, map); },
        py::arg("episode"), py::arg("offset"), py::arg("map") = nullptr);
}
