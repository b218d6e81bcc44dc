#ifndef REACTSIM_TYPES_HPP
#define REACTSIM_TYPES_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reactsim/geometry.hpp"

namespace reactsim {

using AgentId = std::int64_t;

enum class AgentKind { vehicle, pedestrian, cyclist };

std::string_view to_string(AgentKind kind);
AgentKind agent_kind_from_string(std::string_view name);

struct Extent {
  double length = 4.5;  // [m]
  double width = 2.0;   // [m]

  friend bool operator==(const Extent&, const Extent&) = default;
};

// One traffic participant at one instant.
struct AgentState {
  AgentId id = 0;
  Pose2 pose;
  Extent extent;
  double speed = 0.0;  // [m/s], along pose.yaw
  AgentKind kind = AgentKind::vehicle;
  bool active = true;

  friend bool operator==(const AgentState&, const AgentState&) = default;

  Obb footprint() const {
    return Obb{pose.position(), {extent.length / 2.0, extent.width / 2.0}, pose.yaw};
  }
};

// Throws DomainError when extents are not positive, speed is negative or a value is non-finite.
void validate(const AgentState& agent);

struct SimState {
  std::int64_t step_index = 0;
  std::vector<AgentState> agents;
  AgentId ego_id = 0;

  friend bool operator==(const SimState&, const SimState&) = default;

  const AgentState* find(AgentId id) const;
  AgentState* find(AgentId id);
  const AgentState& agent(AgentId id) const;  // throws DomainError if missing
  const AgentState& ego() const { return agent(ego_id); }
};

// Checks id uniqueness, ego presence and per-agent validity.
void validate(const SimState& state);

enum class Termination { completed, ego_collision, external };

std::string_view to_string(Termination termination);
Termination termination_from_string(std::string_view name);

struct Episode {
  double dt = 0.1;
  std::string map_id;
  std::vector<SimState> states;
  Termination termination = Termination::completed;

  friend bool operator==(const Episode&, const Episode&) = default;

  double time_of(std::size_t state_offset) const { return dt * static_cast<double>(state_offset); }
};

// Contiguous step indices, non-empty, stable agent id sets, constant extents.
void validate(const Episode& episode);

}  // namespace reactsim

#endif  // REACTSIM_TYPES_HPP
