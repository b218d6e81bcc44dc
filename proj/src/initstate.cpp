#include "reactsim/initstate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <queue>
#include <random>

#include "reactsim/errors.hpp"

namespace reactsim {

void ProceduralConfig::validate() const {
  if (!(agents_mean >= 0.0) || !std::isfinite(agents_mean)) throw DomainError("agents_mean must be >= 0");
  if (!(min_gap > 0.0)) throw DomainError("min_gap must be positive");
  if (!(speed_min >= 0.0) || speed_max < speed_min) throw DomainError("speed range must be ordered and >= 0");
  if (!(ego_extent.length > 0.0 && ego_extent.width > 0.0 && agent_extent.length > 0.0 && agent_extent.width > 0.0)) {
    throw DomainError("extents must be positive");
  }
  if (max_attempts < 1) throw DomainError("max_attempts must be >= 1");
}

namespace {

struct LanePoint {
  const Lane* lane = nullptr;
  double arclength = 0.0;
};

LanePoint sample_lane_point(const SemanticMap& map, RngStream& rng) {
  const double total = map.total_lane_length();
  double u = rng.uniform() * total;
  for (const Lane& lane : map.lanes()) {
    const double len = lane.centerline.length();
    if (u < len) return {&lane, u};
    u -= len;
  }
  const Lane& last = map.lanes().back();
  return {&last, last.centerline.length()};
}

}  // namespace

Pose2 sample_location(const SemanticMap& map, RngStream& rng) {
  if (map.lanes().empty() || !(map.total_lane_length() > 0.0)) throw DomainError("no lanes");
  const LanePoint p = sample_lane_point(map, rng);
  return lane_pose_at(map, p.lane->id, p.arclength);
}

SimState reanchor(const SimState& state, const Pose2& location) {
  const Pose2 ego = state.ego().pose;
  const double rotation = location.yaw - ego.yaw;
  SimState out = state;
  for (AgentState& a : out.agents) {
    if (a.id == state.ego_id) {
      a.pose = location;
      continue;
    }
    const Vec2 offset = rotate(a.pose.position() - ego.position(), rotation);
    a.pose = {location.x + offset.x, location.y + offset.y, normalize_angle(a.pose.yaw + rotation)};
  }
  return out;
}

SimState sample_state_empirical(std::span<const Episode> dataset, const Pose2& location, double radius,
                                RngStream& rng) {
  if (dataset.empty()) throw DomainError("empirical sampling needs a non-empty dataset");
  std::vector<const SimState*> candidates;
  for (const Episode& e : dataset) {
    for (const SimState& s : e.states) {
      if (distance(s.ego().pose.position(), location.position()) <= radius) candidates.push_back(&s);
    }
  }
  if (candidates.empty()) throw DomainError("no feasible states");
  const auto pick = std::min(candidates.size() - 1, static_cast<std::size_t>(rng.uniform() * candidates.size()));
  SimState out = reanchor(*candidates[pick], location);
  out.step_index = 0;
  return out;
}

namespace {

struct Placed {
  const Lane* lane = nullptr;
  double arclength = 0.0;
  AgentState agent;
};

bool corridor_conflict(const AgentState& a, const AgentState& b, const ProceduralConfig& cfg) {
  const Vec2 local = a.pose.to_local(b.pose.position());
  const double rel = b.pose.yaw - a.pose.yaw;
  const double c = std::abs(std::cos(rel));
  const double s = std::abs(std::sin(rel));
  const double half_lon = c * b.extent.length / 2.0 + s * b.extent.width / 2.0;
  const double half_lat = s * b.extent.length / 2.0 + c * b.extent.width / 2.0;
  const double long_gap = std::abs(local.x) - a.extent.length / 2.0 - half_lon;
  const double lat_gap = std::abs(local.y) - a.extent.width / 2.0 - half_lat;
  return long_gap < cfg.min_gap && lat_gap < cfg.lateral_clearance;
}

// Shortest forward distance along the lane graph from (from, s_from) to (to, s_to), searched up
// to `limit`; infinity when unreachable within it.
double forward_distance(const SemanticMap& map, const Lane& from, double s_from, const Lane& to, double s_to,
                        double limit) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double best = &from == &to && s_to >= s_from ? s_to - s_from : kInf;
  // Dijkstra over lane starts, keyed by distance from the query point.
  std::map<LaneId, double> settled;
  std::priority_queue<std::pair<double, LaneId>, std::vector<std::pair<double, LaneId>>, std::greater<>> open;
  for (LaneId next : from.successors) open.push({from.centerline.length() - s_from, next});
  while (!open.empty()) {
    const auto [d, id] = open.top();
    open.pop();
    if (d >= std::min(best, limit) || settled.contains(id)) continue;
    settled[id] = d;
    const Lane& lane = map.lane(id);
    if (lane.id == to.id) best = std::min(best, d + s_to);
    for (LaneId next : lane.successors) open.push({d + lane.centerline.length(), next});
  }
  return best;
}

bool too_close(const SemanticMap& map, const Placed& c, const Placed& p, const ProceduralConfig& cfg) {
  if (obb_overlap(c.agent.footprint(), p.agent.footprint())) return true;
  const double half_sum = (c.agent.extent.length + p.agent.extent.length) / 2.0;
  if (c.lane != nullptr && p.lane != nullptr) {
    const double limit = cfg.min_gap + half_sum;
    const double along = std::min(forward_distance(map, *c.lane, c.arclength, *p.lane, p.arclength, limit),
                                  forward_distance(map, *p.lane, p.arclength, *c.lane, c.arclength, limit));
    if (along - half_sum < cfg.min_gap) return true;
  }
  return corridor_conflict(c.agent, p.agent, cfg) || corridor_conflict(p.agent, c.agent, cfg);
}

double uniform_in(RngStream& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

}  // namespace

SimState sample_state_procedural(const SemanticMap& map, const Pose2& location, const ProceduralConfig& cfg,
                                 RngStream& rng) {
  cfg.validate();
  SimState state;
  state.ego_id = 0;
  AgentState ego{0, location, cfg.ego_extent, uniform_in(rng, cfg.speed_min, cfg.speed_max), AgentKind::vehicle, true};
  state.agents.push_back(ego);
  if (map.lanes().empty() || cfg.agents_mean <= 0.0) return state;

  std::vector<Placed> placed;
  {
    const LaneProjection proj = match_lane(map, location, std::numbers::pi / 2.0);
    const Lane& lane = map.lane(proj.lane);
    const bool on_lane = std::abs(proj.lateral_offset) <= lane.width / 2.0;
    placed.push_back({on_lane ? &lane : nullptr, proj.arclength, ego});
  }

  std::poisson_distribution<int> count_dist(cfg.agents_mean);
  const int candidates = count_dist(rng);
  AgentId next_id = 1;
  for (int k = 0; k < candidates; ++k) {
    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
      const LanePoint lp = sample_lane_point(map, rng);
      const double speed = uniform_in(rng, cfg.speed_min, cfg.speed_max);
      const Pose2 pose = lane_pose_at(map, lp.lane->id, lp.arclength);
      if (distance(pose.position(), location.position()) > cfg.placement_radius) continue;
      Placed cand{lp.lane, lp.arclength, AgentState{next_id, pose, cfg.agent_extent, speed, AgentKind::vehicle, true}};
      const bool rejected =
          std::any_of(placed.begin(), placed.end(), [&](const Placed& p) { return too_close(map, cand, p, cfg); });
      if (rejected) continue;
      placed.push_back(cand);
      state.agents.push_back(cand.agent);
      ++next_id;
      break;
    }
  }
  return state;
}

SimState state_from_raster(const Grid& grid, double default_speed, int min_pixels) {
  if (!(default_speed >= 0.0)) throw DomainError("default_speed must be >= 0");
  const std::vector<ExtractedAgent> ego = extract_components(grid, Channel::ego, min_pixels);
  if (ego.size() != 1) {
    throw DomainError("expected exactly one ego component, found " + std::to_string(ego.size()));
  }
  auto to_agent = [&](AgentId id, const ExtractedAgent& e) {
    return AgentState{id,
                      {e.bbox.center.x, e.bbox.center.y, e.bbox.yaw},
                      {2.0 * e.bbox.half_extents.x, 2.0 * e.bbox.half_extents.y},
                      default_speed,
                      AgentKind::vehicle,
                      true};
  };
  SimState state;
  state.ego_id = 0;
  state.agents.push_back(to_agent(0, ego.front()));
  AgentId id = 1;
  for (const ExtractedAgent& e : extract_agents(grid, min_pixels)) state.agents.push_back(to_agent(id++, e));
  return state;
}

}  // namespace reactsim
