#ifndef REACTSIM_SEMANTIC_MAP_HPP
#define REACTSIM_SEMANTIC_MAP_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "reactsim/geometry.hpp"

namespace reactsim {

using LaneId = std::int64_t;
using LightId = std::int64_t;

enum class LightColor { red, green };

struct Lane {
  LaneId id = 0;
  Polyline centerline;
  double width = 3.5;          // [m]
  std::vector<LaneId> successors;
  std::optional<LightId> light_id;
  double speed_limit = 10.0;   // [m/s]
};

struct Crosswalk {
  std::vector<Vec2> polygon;
};

struct LightPhase {
  double start = 0.0;  // [s], inclusive
  double end = 0.0;    // [s], exclusive
  LightColor color = LightColor::green;
};

struct TrafficLight {
  LightId id = 0;
  std::vector<LightPhase> schedule;
};

struct LaneProjection {
  LaneId lane = 0;
  double arclength = 0.0;
  double lateral_offset = 0.0;  // positive left of the centerline direction
};

// Lane graph, crosswalks and light schedules. Immutable after construction.
class SemanticMap {
 public:
  SemanticMap() = default;
  // Validates successor references, light references and per-light schedule overlap.
  SemanticMap(std::string id, std::vector<Lane> lanes, std::vector<Crosswalk> crosswalks,
              std::vector<TrafficLight> lights);

  const std::string& id() const { return id_; }
  const std::vector<Lane>& lanes() const { return lanes_; }
  const std::vector<Crosswalk>& crosswalks() const { return crosswalks_; }
  const std::vector<TrafficLight>& lights() const { return lights_; }

  const Lane& lane(LaneId id) const;
  const TrafficLight& light(LightId id) const;

  // Phases not covering `time` default to green.
  LightColor light_color(LightId id, double time) const;
  // False when the lane's controlling light is red at `time`.
  bool lane_open(const Lane& lane, double time) const;
  double total_lane_length() const;

 private:
  std::string id_;
  std::vector<Lane> lanes_;
  std::vector<Crosswalk> crosswalks_;
  std::vector<TrafficLight> lights_;
  std::map<LaneId, std::size_t> lane_index_;
  std::map<LightId, std::size_t> light_index_;
};

// Lane whose centerline is closest to `point`; distance ties (within 1e-9 m) go to the lowest lane id.
LaneProjection nearest_lane(const SemanticMap& map, const Vec2& point);

// Like nearest_lane, restricted to lanes whose local tangent is within `max_heading_error` of `pose.yaw`.
// Falls back to nearest_lane when no lane qualifies.
LaneProjection match_lane(const SemanticMap& map, const Pose2& pose, double max_heading_error);

// Pose on the centerline at `arclength`, yaw along the local tangent. Arclengths within 1e-3 m
// outside [0, length] are clamped; anything further is rejected.
Pose2 lane_pose_at(const SemanticMap& map, LaneId lane, double arclength);

}  // namespace reactsim

#endif  // REACTSIM_SEMANTIC_MAP_HPP
