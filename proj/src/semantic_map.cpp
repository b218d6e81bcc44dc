#include "reactsim/semantic_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "reactsim/errors.hpp"

namespace reactsim {

namespace {

constexpr double kTieTolerance = 1e-9;
constexpr double kArclengthSlack = 1e-3;

}  // namespace

SemanticMap::SemanticMap(std::string id, std::vector<Lane> lanes, std::vector<Crosswalk> crosswalks,
                         std::vector<TrafficLight> lights)
    : id_(std::move(id)), lanes_(std::move(lanes)), crosswalks_(std::move(crosswalks)), lights_(std::move(lights)) {
  for (std::size_t i = 0; i < lanes_.size(); ++i) {
    const Lane& l = lanes_[i];
    if (l.centerline.size() < 2) throw DomainError("lane " + std::to_string(l.id) + ": centerline needs >= 2 points");
    if (!(l.width > 0.0)) throw DomainError("lane " + std::to_string(l.id) + ": width must be positive");
    if (!(l.speed_limit > 0.0)) throw DomainError("lane " + std::to_string(l.id) + ": speed limit must be positive");
    if (!lane_index_.emplace(l.id, i).second) throw DomainError("duplicate lane id " + std::to_string(l.id));
  }
  for (std::size_t i = 0; i < lights_.size(); ++i) {
    if (!light_index_.emplace(lights_[i].id, i).second) {
      throw DomainError("duplicate light id " + std::to_string(lights_[i].id));
    }
    std::vector<LightPhase> phases = lights_[i].schedule;
    std::sort(phases.begin(), phases.end(), [](const LightPhase& a, const LightPhase& b) { return a.start < b.start; });
    for (std::size_t k = 0; k < phases.size(); ++k) {
      if (!(phases[k].end > phases[k].start)) {
        throw DomainError("light " + std::to_string(lights_[i].id) + ": phase end must follow start");
      }
      if (k > 0 && phases[k].start < phases[k - 1].end) {
        throw DomainError("light " + std::to_string(lights_[i].id) + ": overlapping phases");
      }
    }
  }
  for (const Lane& l : lanes_) {
    for (LaneId s : l.successors) {
      if (!lane_index_.contains(s)) {
        throw DomainError("lane " + std::to_string(l.id) + ": unknown successor " + std::to_string(s));
      }
    }
    if (l.light_id && !light_index_.contains(*l.light_id)) {
      throw DomainError("lane " + std::to_string(l.id) + ": unknown light " + std::to_string(*l.light_id));
    }
  }
  for (const Crosswalk& c : crosswalks_) {
    if (c.polygon.size() < 3) throw DomainError("crosswalk polygon needs >= 3 points");
  }
}

const Lane& SemanticMap::lane(LaneId id) const {
  const auto it = lane_index_.find(id);
  if (it == lane_index_.end()) throw DomainError("unknown lane id " + std::to_string(id));
  return lanes_[it->second];
}

const TrafficLight& SemanticMap::light(LightId id) const {
  const auto it = light_index_.find(id);
  if (it == light_index_.end()) throw DomainError("unknown light id " + std::to_string(id));
  return lights_[it->second];
}

LightColor SemanticMap::light_color(LightId id, double time) const {
  for (const LightPhase& p : light(id).schedule) {
    if (time >= p.start && time < p.end) return p.color;
  }
  return LightColor::green;
}

bool SemanticMap::lane_open(const Lane& lane, double time) const {
  return !lane.light_id || light_color(*lane.light_id, time) != LightColor::red;
}

double SemanticMap::total_lane_length() const {
  double total = 0.0;
  for (const Lane& l : lanes_) total += l.centerline.length();
  return total;
}

namespace {

LaneProjection best_projection(const SemanticMap& map, const Vec2& point, const Pose2* heading_filter,
                               double max_heading_error) {
  const Lane* best_lane = nullptr;
  PolylineProjection best;
  best.distance = std::numeric_limits<double>::infinity();
  for (const Lane& lane : map.lanes()) {
    const PolylineProjection p = lane.centerline.project(point);
    if (heading_filter != nullptr) {
      const double err = normalize_angle(heading_filter->yaw - lane.centerline.tangent_at(p.arclength));
      if (std::abs(err) > max_heading_error) continue;
    }
    const bool closer = p.distance < best.distance - kTieTolerance;
    const bool tie = std::abs(p.distance - best.distance) <= kTieTolerance;
    if (best_lane == nullptr || closer || (tie && lane.id < best_lane->id)) {
      best_lane = &lane;
      best = p;
    }
  }
  if (best_lane == nullptr) throw DomainError("no lanes");
  return {best_lane->id, best.arclength, best.lateral};
}

}  // namespace

LaneProjection nearest_lane(const SemanticMap& map, const Vec2& point) {
  if (map.lanes().empty()) throw DomainError("no lanes");
  return best_projection(map, point, nullptr, 0.0);
}

LaneProjection match_lane(const SemanticMap& map, const Pose2& pose, double max_heading_error) {
  if (map.lanes().empty()) throw DomainError("no lanes");
  try {
    return best_projection(map, pose.position(), &pose, max_heading_error);
  } catch (const DomainError&) {
    return best_projection(map, pose.position(), nullptr, 0.0);
  }
}

Pose2 lane_pose_at(const SemanticMap& map, LaneId lane_id, double arclength) {
  const Lane& lane = map.lane(lane_id);
  const double length = lane.centerline.length();
  if (!std::isfinite(arclength) || arclength < -kArclengthSlack || arclength > length + kArclengthSlack) {
    throw DomainError("arclength " + std::to_string(arclength) + " outside lane " + std::to_string(lane_id) +
                      " of length " + std::to_string(length));
  }
  const double s = std::clamp(arclength, 0.0, length);
  const Vec2 p = lane.centerline.point_at(s);
  return {p.x, p.y, lane.centerline.tangent_at(s)};
}

}  // namespace reactsim
