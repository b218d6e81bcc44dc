#include "reactsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "reactsim/errors.hpp"
#include "reactsim/parallel.hpp"

namespace reactsim {

namespace {

std::size_t horizon_offset(double horizon, double dt) {
  const double k = std::round(horizon / dt);
  if (k < 0.0 || std::abs(k * dt - horizon) > 1e-9 * std::max(1.0, horizon)) {
    throw DomainError("horizon " + std::to_string(horizon) + " s is not a multiple of dt");
  }
  return static_cast<std::size_t>(k);
}

}  // namespace

RealismReport displacement_error(std::span<const Episode> sims, std::span<const Episode> gts,
                                 std::span<const double> horizons) {
  if (sims.size() != gts.size()) throw DomainError("displacement_error: sim/gt counts differ");
  RealismReport report;
  report.horizons.assign(horizons.begin(), horizons.end());
  report.n_scenes = static_cast<int>(sims.size());
  std::vector<double> sum(horizons.size(), 0.0);
  std::vector<long> count(horizons.size(), 0);
  for (std::size_t scene = 0; scene < sims.size(); ++scene) {
    const Episode& sim = sims[scene];
    const Episode& gt = gts[scene];
    if (sim.dt != gt.dt) throw DomainError("displacement_error: dt mismatch in scene " + std::to_string(scene));
    if (sim.states.empty() || gt.states.empty() || !(sim.states.front() == gt.states.front())) {
      throw DomainError("displacement_error: mismatched s1 in scene " + std::to_string(scene));
    }
    std::set<AgentId> compared;
    for (std::size_t h = 0; h < horizons.size(); ++h) {
      const std::size_t k = horizon_offset(horizons[h], sim.dt);
      if (k >= sim.states.size() || k >= gt.states.size()) {
        throw DomainError("displacement_error: horizon " + std::to_string(horizons[h]) + " s beyond episode " +
                          std::to_string(scene));
      }
      const SimState& s = sim.states[k];
      const SimState& g = gt.states[k];
      for (const AgentState& a : s.agents) {
        if (a.id == s.ego_id || !a.active) continue;
        const AgentState* b = g.find(a.id);
        if (b == nullptr || !b->active) continue;
        sum[h] += distance(a.pose.position(), b->pose.position());
        ++count[h];
        compared.insert(a.id);
      }
    }
    report.n_agents += static_cast<int>(compared.size());
  }
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    report.mean_l2.push_back(count[h] > 0 ? sum[h] / static_cast<double>(count[h]) : 0.0);
  }
  return report;
}

RealismReport displacement_error(const Episode& sim, const Episode& gt, std::span<const double> horizons) {
  return displacement_error(std::span<const Episode>(&sim, 1), std::span<const Episode>(&gt, 1), horizons);
}

SimState make_static_lead_scene(double gap, double follower_speed, const SemanticMap& map, Extent follower_extent,
                                Extent lead_extent) {
  if (!(gap > 0.0)) throw DomainError("static lead gap must be positive");
  if (!(follower_speed >= 0.0)) throw DomainError("follower speed must be >= 0");
  if (map.lanes().empty()) throw DomainError("no lanes");
  const Lane* lane = &map.lanes().front();
  for (const Lane& l : map.lanes()) {
    if (l.id < lane->id) lane = &l;
  }
  const double s_follower = follower_extent.length / 2.0 + 1.0;
  const double s_lead = s_follower + follower_extent.length / 2.0 + gap + lead_extent.length / 2.0;
  if (s_lead + lead_extent.length / 2.0 > lane->centerline.length()) {
    throw DomainError("lane too short for a " + std::to_string(gap) + " m static-lead scene");
  }
  SimState s;
  s.ego_id = kLeadId;
  s.agents.push_back({kLeadId, lane_pose_at(map, lane->id, s_lead), lead_extent, 0.0, AgentKind::vehicle, true});
  s.agents.push_back(
      {kFollowerId, lane_pose_at(map, lane->id, s_follower), follower_extent, follower_speed, AgentKind::vehicle, true});
  return s;
}

std::vector<SimState> make_static_lead_suite(const StaticLeadSuiteConfig& cfg, std::uint64_t seed,
                                             const SemanticMap& map) {
  if (cfg.scenes < 1) throw DomainError("suite needs at least one scene");
  if (cfg.require_reaction && cfg.gap_min >= cfg.speed_max * cfg.horizon) {
    throw DomainError("no scene in the suite ranges requires a reaction");
  }
  RngStream rng(seed);
  std::vector<SimState> suite;
  while (static_cast<int>(suite.size()) < cfg.scenes) {
    const double gap = cfg.gap_min + (cfg.gap_max - cfg.gap_min) * rng.uniform();
    const double speed = cfg.speed_min + (cfg.speed_max - cfg.speed_min) * rng.uniform();
    if (cfg.require_reaction && gap >= speed * cfg.horizon) continue;
    suite.push_back(make_static_lead_scene(gap, speed, map));
  }
  return suite;
}

namespace {

bool follower_hits_lead(const Episode& e) {
  for (const SimState& s : e.states) {
    const AgentState* f = s.find(kFollowerId);
    const AgentState* l = s.find(kLeadId);
    if (f == nullptr || l == nullptr || !f->active) continue;
    if (obb_overlap(f->footprint(), l->footprint())) return true;
  }
  return false;
}

}  // namespace

ReactivityReport reactivity(std::span<const SimState> suite, const SubjectFactory& subject, const SemanticMap& map,
                            const SimConfig& cfg) {
  if (suite.empty()) throw DomainError("reactivity suite is empty");
  std::vector<PolicyPtr> policies(suite.size());
  for (std::size_t i = 0; i < suite.size(); ++i) policies[i] = subject(i, suite[i]);
  SimConfig scene_cfg = cfg;
  scene_cfg.jobs = 1;
  const StationaryEgo lead;
  std::vector<char> clean(suite.size(), 0);
  parallel_for(suite.size(), cfg.jobs, [&](std::size_t i) {
    PolicySet set;
    set.assign(kFollowerId, policies[i]);
    clean[i] = follower_hits_lead(unroll(suite[i], set, lead, map, scene_cfg)) ? 0 : 1;
  });
  ReactivityReport r;
  r.scenes_total = static_cast<int>(suite.size());
  r.scenes_without_collision = static_cast<int>(std::count(clean.begin(), clean.end(), 1));
  r.reactivity = static_cast<double>(r.scenes_without_collision) / static_cast<double>(r.scenes_total);
  return r;
}

Episode constant_speed_log(const SimState& scene, const SemanticMap& map, const SimConfig& cfg) {
  SimConfig log_cfg = cfg;
  log_cfg.interrupt_on_ego_collision = false;
  PolicySet set;
  set.assign(kFollowerId, std::make_shared<ConstantVelocityPolicy>());
  return unroll(scene, set, StationaryEgo{}, map, log_cfg);
}

std::string_view to_string(CollisionKind kind) {
  switch (kind) {
    case CollisionKind::front: return "front";
    case CollisionKind::side: return "side";
    case CollisionKind::rear: return "rear";
  }
  return "side";
}

namespace {

// Sutherland-Hodgman clip of `subject` by the convex CCW polygon `clip`, boundary inclusive.
std::vector<Vec2> clip_polygon(std::vector<Vec2> subject, const std::vector<Vec2>& clip) {
  for (std::size_t i = 0; i < clip.size() && !subject.empty(); ++i) {
    const Vec2 a = clip[i];
    const Vec2 b = clip[(i + 1) % clip.size()];
    auto inside = [&](const Vec2& p) { return cross(b - a, p - a) >= -1e-12; };
    std::vector<Vec2> out;
    for (std::size_t j = 0; j < subject.size(); ++j) {
      const Vec2 p = subject[j];
      const Vec2 q = subject[(j + 1) % subject.size()];
      const bool pin = inside(p);
      const bool qin = inside(q);
      if (pin) out.push_back(p);
      if (pin != qin) {
        const double dp = cross(b - a, p - a);
        const double dq = cross(b - a, q - a);
        out.push_back(p + (dp / (dp - dq)) * (q - p));
      }
    }
    subject = std::move(out);
  }
  return subject;
}

Vec2 polygon_centroid(const std::vector<Vec2>& poly) {
  double area2 = 0.0;
  Vec2 acc;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    const double c = cross(p, q);
    area2 += c;
    acc += c * (p + q);
  }
  if (std::abs(area2) > 1e-12) return (1.0 / (3.0 * area2)) * acc;
  Vec2 mean;
  for (const Vec2& p : poly) mean += p;
  return (1.0 / static_cast<double>(poly.size())) * mean;
}

}  // namespace

CollisionKind classify_collision(const AgentState& ego, const AgentState& other) {
  const Obb a = ego.footprint();
  const Obb b = other.footprint();
  if (!obb_overlap(a, b)) throw DomainError("classify_collision: agents do not overlap");
  std::vector<Vec2> region = clip_polygon(b.corners(), a.corners());
  // Exact tangency can clip to nothing numerically; the closest corner of the other box stands in.
  Vec2 contact;
  if (region.empty()) {
    const auto corners = b.corners();
    contact = *std::min_element(corners.begin(), corners.end(), [&](const Vec2& p, const Vec2& q) {
      return distance(p, a.center) < distance(q, a.center);
    });
  } else {
    contact = polygon_centroid(region);
  }
  const Vec2 local = ego.pose.to_local(contact);
  const double az = std::abs(std::atan2(local.y, local.x)) * 180.0 / std::numbers::pi;
  if (az <= 45.0) return CollisionKind::front;
  if (az >= 135.0) return CollisionKind::rear;
  return CollisionKind::side;
}

double front_gap(const SimState& state) {
  const AgentState& ego = state.ego();
  double best = std::numeric_limits<double>::infinity();
  for (const AgentState& a : state.agents) {
    if (a.id == state.ego_id || !a.active) continue;
    const Vec2 local = ego.pose.to_local(a.pose.position());
    if (local.x <= 0.0) continue;
    const double rel = a.pose.yaw - ego.pose.yaw;
    const double c = std::abs(std::cos(rel));
    const double s = std::abs(std::sin(rel));
    const double half_lat = s * a.extent.length / 2.0 + c * a.extent.width / 2.0;
    if (std::abs(local.y) - half_lat >= ego.extent.width / 2.0 + 0.5) continue;
    const double half_lon = c * a.extent.length / 2.0 + s * a.extent.width / 2.0;
    best = std::min(best, local.x - ego.extent.length / 2.0 - half_lon);
  }
  return best;
}

namespace {

double distance_to_track(const std::vector<Vec2>& track, const Vec2& p) {
  if (track.size() == 1) return distance(track.front(), p);
  return Polyline(track).project(p).distance;
}

}  // namespace

SceneEvents evaluate_scene(const Episode& episode, const Episode& reference, const PlannerThresholds& th) {
  if (episode.states.empty() || reference.states.empty()) throw DomainError("planner_eval: empty episode");
  if (episode.dt != reference.dt) throw DomainError("planner_eval: dt mismatch");
  if (episode.states.front().ego_id != reference.states.front().ego_id) {
    throw DomainError("planner_eval: ego id mismatch");
  }
  SceneEvents ev;
  for (const SimState& s : episode.states) {
    if (const auto hit = first_ego_contact(s)) {
      ev.collision = classify_collision(s.ego(), s.agent(*hit));
      break;
    }
  }

  const std::size_t last = episode.states.size() - 1;
  const SimState& ref_end = reference.states[std::min(last, reference.states.size() - 1)];
  ev.displacement = distance(episode.states.back().ego().pose.position(), ref_end.ego().pose.position()) > th.d_thresh;

  const auto window = static_cast<std::size_t>(std::llround(th.window / episode.dt));
  const std::size_t common = std::min(episode.states.size(), reference.states.size());
  for (std::size_t i = 0; window > 0 && i + window < common && !ev.passiveness; ++i) {
    double ego_sum = 0.0, ref_sum = 0.0, min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t k = i; k <= i + window; ++k) {
      ego_sum += episode.states[k].ego().speed;
      ref_sum += reference.states[k].ego().speed;
      min_gap = std::min(min_gap, front_gap(episode.states[k]));
    }
    ev.passiveness = min_gap > th.g_free && ego_sum < th.kappa * ref_sum;
  }

  std::vector<Vec2> track;
  for (const SimState& s : reference.states) {
    const Vec2 p = s.ego().pose.position();
    if (track.empty() || !(track.back() == p)) track.push_back(p);
  }
  for (const SimState& s : episode.states) {
    if (distance_to_track(track, s.ego().pose.position()) > th.l_thresh) {
      ev.off_reference = true;
      break;
    }
  }
  return ev;
}

PlannerReport planner_eval(std::span<const Episode> episodes, std::span<const Episode> references,
                           const PlannerThresholds& thresholds) {
  if (episodes.size() != references.size()) throw DomainError("planner_eval: episode/reference counts differ");
  PlannerReport r;
  r.scenes = static_cast<int>(episodes.size());
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const SceneEvents ev = evaluate_scene(episodes[i], references[i], thresholds);
    if (ev.collision == CollisionKind::front) ++r.front_collisions;
    if (ev.collision == CollisionKind::side) ++r.side_collisions;
    if (ev.collision == CollisionKind::rear) ++r.rear_collisions;
    r.displacement_errors += ev.displacement ? 1 : 0;
    r.passiveness += ev.passiveness ? 1 : 0;
    r.distance_to_reference += ev.off_reference ? 1 : 0;
  }
  return r;
}

int count_agent_contacts(const Episode& episode) {
  int contacts = 0;
  for (const SimState& s : episode.states) {
    for (std::size_t i = 0; i < s.agents.size(); ++i) {
      const AgentState& a = s.agents[i];
      if (a.id == s.ego_id || !a.active) continue;
      for (std::size_t j = i + 1; j < s.agents.size(); ++j) {
        const AgentState& b = s.agents[j];
        if (b.id == s.ego_id || !b.active) continue;
        contacts += obb_overlap(a.footprint(), b.footprint()) ? 1 : 0;
      }
    }
  }
  return contacts;
}

}  // namespace reactsim
