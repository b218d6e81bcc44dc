#include "reactsim/scenarios.hpp"

#include <cmath>
#include <numbers>

#include "reactsim/errors.hpp"

namespace reactsim {

SemanticMap straight_map(double length, int lanes, double spacing, std::string id) {
  if (!(length > 0.0) || lanes < 1) throw DomainError("straight_map: bad dimensions");
  std::vector<Lane> out;
  for (int k = 0; k < lanes; ++k) {
    Lane lane;
    lane.id = k + 1;
    const double y = spacing * k;
    lane.centerline = Polyline({{0.0, y}, {length, y}});
    out.push_back(std::move(lane));
  }
  return SemanticMap(std::move(id), std::move(out), {}, {});
}

namespace {

Polyline arc(Vec2 center, double radius, double from, double to, int segments) {
  std::vector<Vec2> pts;
  for (int i = 0; i <= segments; ++i) {
    const double a = from + (to - from) * i / segments;
    pts.push_back(center + radius * unit_from_yaw(a));
  }
  return Polyline(std::move(pts));
}

Lane make_lane(LaneId id, Polyline centerline, std::vector<LaneId> successors,
               std::optional<LightId> light = std::nullopt) {
  Lane lane;
  lane.id = id;
  lane.centerline = std::move(centerline);
  lane.successors = std::move(successors);
  lane.light_id = light;
  return lane;
}

}  // namespace

SemanticMap ring_map(std::string id) {
  constexpr double lx = 80.0, ly = 40.0, r = 15.0;
  constexpr double pi = std::numbers::pi;
  std::vector<Lane> lanes;
  lanes.push_back(make_lane(1, Polyline({{0, 0}, {lx, 0}}), {2}));
  lanes.push_back(make_lane(2, arc({lx, r}, r, -pi / 2, 0, 12), {3}));
  lanes.push_back(make_lane(3, Polyline({{lx + r, r}, {lx + r, r + ly}}), {4}));
  lanes.push_back(make_lane(4, arc({lx, r + ly}, r, 0, pi / 2, 12), {5}));
  lanes.push_back(make_lane(5, Polyline({{lx, 2 * r + ly}, {0, 2 * r + ly}}), {6}, 1));
  lanes.push_back(make_lane(6, arc({0, r + ly}, r, pi / 2, pi, 12), {7}));
  lanes.push_back(make_lane(7, Polyline({{-r, r + ly}, {-r, r}}), {8}));
  lanes.push_back(make_lane(8, arc({0, r}, r, pi, 3 * pi / 2, 12), {1}));
  std::vector<TrafficLight> lights = {{1, {{0.0, 3.0, LightColor::green}, {3.0, 6.0, LightColor::red}}}};
  std::vector<Crosswalk> crosswalks = {{{{38, -3}, {42, -3}, {42, 3}, {38, 3}}}};
  return SemanticMap(std::move(id), std::move(lanes), std::move(crosswalks), std::move(lights));
}

SemanticMap intersection_map(std::string id) {
  constexpr double box = 8.0, reach = 150.0;
  std::vector<Lane> lanes;
  lanes.push_back(make_lane(1, Polyline({{-reach, 0}, {-box, 0}}), {2}));
  lanes.push_back(make_lane(2, Polyline({{-box, 0}, {box, 0}}), {3}, 1));
  lanes.push_back(make_lane(3, Polyline({{box, 0}, {reach, 0}}), {}));
  lanes.push_back(make_lane(4, Polyline({{0, -reach}, {0, -box}}), {5}));
  lanes.push_back(make_lane(5, Polyline({{0, -box}, {0, box}}), {6}, 2));
  lanes.push_back(make_lane(6, Polyline({{0, box}, {0, reach}}), {}));
  constexpr double forever = 1e9;
  std::vector<TrafficLight> lights = {{1, {{0.0, forever, LightColor::green}}}, {2, {{0.0, forever, LightColor::red}}}};
  std::vector<Crosswalk> crosswalks = {{{{-box - 3, -box}, {-box, -box}, {-box, box}, {-box - 3, box}}},
                                       {{{-box, -box - 3}, {box, -box - 3}, {box, -box}, {-box, -box}}}};
  return SemanticMap(std::move(id), std::move(lanes), std::move(crosswalks), std::move(lights));
}

Episode teacher_episode(std::shared_ptr<const SemanticMap> map, std::uint64_t seed, int horizon_steps,
                        const ProceduralConfig& sampler) {
  const auto teacher = std::make_shared<ReactiveFollowPolicy>();
  ModeInputs in;
  in.map = std::move(map);
  in.policies.set_default(teacher);
  in.ego = std::make_shared<PolicyEgo>(teacher);
  in.sampler = sampler;
  SimConfig cfg;
  cfg.seed = seed;
  cfg.horizon_steps = horizon_steps;
  cfg.interrupt_on_ego_collision = false;
  return run_mode(Mode::full, in, cfg);
}

std::string_view to_string(TrafficMode mode) { return mode == TrafficMode::log_replay ? "log_replay" : "reactive"; }

TrafficMode traffic_mode_from_string(std::string_view name) {
  if (name == "log_replay") return TrafficMode::log_replay;
  if (name == "reactive") return TrafficMode::reactive;
  throw DomainError("unknown traffic mode '" + std::string(name) + "'");
}

PlannerFixture make_intersection_fixture(const SemanticMap& map, std::uint64_t seed, const SimConfig& cfg) {
  RngStream rng(seed);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  const Lane& approach = map.lane(1);
  const Lane& cross = map.lane(4);
  const double approach_len = approach.centerline.length();
  const Extent car{};

  SimState s;
  s.ego_id = 0;
  const double ego_s = approach_len - uniform(20.0, 30.0);
  s.agents.push_back({0, lane_pose_at(map, 1, ego_s), car, 8.0, AgentKind::vehicle, true});
  const double trail_s = ego_s - car.length - uniform(4.0, 8.0);
  s.agents.push_back({1, lane_pose_at(map, 1, trail_s), car, 8.0, AgentKind::vehicle, true});
  double cross_s = cross.centerline.length() - uniform(15.0, 40.0);
  for (AgentId id = 2; id <= 3; ++id) {
    s.agents.push_back({id, lane_pose_at(map, 4, cross_s), car, uniform(4.0, 8.0), AgentKind::vehicle, true});
    cross_s -= car.length + uniform(10.0, 20.0);
  }
  validate(s);

  const auto reactive = std::make_shared<ReactiveFollowPolicy>();
  PolicySet set;
  set.set_default(reactive);
  SimConfig ref_cfg = cfg;
  ref_cfg.interrupt_on_ego_collision = false;
  return {s, unroll(s, set, PolicyEgo(reactive), map, ref_cfg)};
}

Episode run_planner_probe(const PlannerFixture& fixture, const SemanticMap& map, const EgoController& probe,
                          TrafficMode traffic, const SimConfig& cfg) {
  PolicySet set;
  if (traffic == TrafficMode::log_replay) {
    set.set_default(std::make_shared<LogReplayPolicy>(std::make_shared<const Episode>(fixture.reference)));
  } else {
    set.set_default(std::make_shared<ReactiveFollowPolicy>());
  }
  SimConfig run_cfg = cfg;
  run_cfg.interrupt_on_ego_collision = true;
  return unroll(fixture.s1, set, probe, map, run_cfg);
}

EgoPtr stop_at_green_ego() {
  FollowParams p;
  p.stop_at_all_lights = true;
  return std::make_shared<PolicyEgo>(std::make_shared<ReactiveFollowPolicy>(p));
}

}  // namespace reactsim
