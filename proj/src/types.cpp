#include "reactsim/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "reactsim/errors.hpp"

namespace reactsim {

std::string_view to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::vehicle: return "vehicle";
    case AgentKind::pedestrian: return "pedestrian";
    case AgentKind::cyclist: return "cyclist";
  }
  return "vehicle";
}

AgentKind agent_kind_from_string(std::string_view name) {
  if (name == "vehicle") return AgentKind::vehicle;
  if (name == "pedestrian") return AgentKind::pedestrian;
  if (name == "cyclist") return AgentKind::cyclist;
  throw DomainError("unknown agent kind '" + std::string(name) + "'");
}

std::string_view to_string(Termination termination) {
  switch (termination) {
    case Termination::completed: return "completed";
    case Termination::ego_collision: return "ego_collision";
    case Termination::external: return "external";
  }
  return "completed";
}

Termination termination_from_string(std::string_view name) {
  if (name == "completed") return Termination::completed;
  if (name == "ego_collision") return Termination::ego_collision;
  if (name == "external") return Termination::external;
  throw DomainError("unknown termination '" + std::string(name) + "'");
}

void validate(const AgentState& agent) {
  const std::string who = "agent " + std::to_string(agent.id);
  if (!std::isfinite(agent.pose.x) || !std::isfinite(agent.pose.y) || !std::isfinite(agent.pose.yaw) ||
      !std::isfinite(agent.speed)) {
    throw DomainError(who + ": non-finite state");
  }
  if (!(agent.extent.length > 0.0) || !(agent.extent.width > 0.0)) throw DomainError(who + ": extent must be positive");
  if (agent.speed < 0.0) throw DomainError(who + ": negative speed");
}

const AgentState* SimState::find(AgentId id) const {
  const auto it = std::find_if(agents.begin(), agents.end(), [id](const AgentState& a) { return a.id == id; });
  return it == agents.end() ? nullptr : &*it;
}

AgentState* SimState::find(AgentId id) {
  const auto it = std::find_if(agents.begin(), agents.end(), [id](const AgentState& a) { return a.id == id; });
  return it == agents.end() ? nullptr : &*it;
}

const AgentState& SimState::agent(AgentId id) const {
  const AgentState* a = find(id);
  if (a == nullptr) throw DomainError("unknown agent id " + std::to_string(id));
  return *a;
}

void validate(const SimState& state) {
  if (state.step_index < 0) throw DomainError("negative step index");
  std::set<AgentId> seen;
  for (const AgentState& a : state.agents) {
    validate(a);
    if (!seen.insert(a.id).second) throw DomainError("duplicate agent id " + std::to_string(a.id));
  }
  if (!seen.contains(state.ego_id)) throw DomainError("ego id " + std::to_string(state.ego_id) + " not in state");
}

void validate(const Episode& episode) {
  if (!(episode.dt > 0.0)) throw DomainError("episode dt must be positive");
  if (episode.states.empty()) throw DomainError("episode has no states");
  const SimState& first = episode.states.front();
  for (std::size_t i = 0; i < episode.states.size(); ++i) {
    const SimState& s = episode.states[i];
    validate(s);
    if (s.step_index != first.step_index + static_cast<std::int64_t>(i)) {
      throw DomainError("episode step indices are not contiguous at offset " + std::to_string(i));
    }
    if (s.ego_id != first.ego_id || s.agents.size() != first.agents.size()) {
      throw DomainError("episode agent set changes at offset " + std::to_string(i));
    }
    for (const AgentState& a : s.agents) {
      const AgentState* a0 = first.find(a.id);
      if (a0 == nullptr || !(a0->extent == a.extent)) {
        throw DomainError("episode agent " + std::to_string(a.id) + " changes identity or extent");
      }
    }
  }
}

}  // namespace reactsim
