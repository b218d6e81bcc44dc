#include "reactsim/kinematics.hpp"

#include <algorithm>
#include <cmath>

#include "reactsim/errors.hpp"

namespace reactsim {

AgentState advance(const AgentState& agent, const Control& control, double dt, double phi_max) {
  if (!std::isfinite(control.phi) || !std::isfinite(control.v) || !std::isfinite(dt) ||
      !std::isfinite(agent.pose.x) || !std::isfinite(agent.pose.y) || !std::isfinite(agent.pose.yaw)) {
    throw DomainError("advance: non-finite input");
  }
  if (!(dt > 0.0)) throw DomainError("advance: dt must be positive");
  if (control.v < 0.0) throw DomainError("advance: negative speed command");
  if (std::abs(control.phi) > phi_max) throw DomainError("advance: yaw rate exceeds phi_max");

  AgentState next = agent;
  next.pose.yaw = normalize_angle(agent.pose.yaw + control.phi * dt);
  const double step = control.v * dt;
  next.pose.x = agent.pose.x + step * std::cos(next.pose.yaw);
  next.pose.y = agent.pose.y + step * std::sin(next.pose.yaw);
  next.speed = control.v;
  return next;
}

Control fit_controls(const Pose2& from, const Pose2& to, double dt, double phi_max) {
  if (!(dt > 0.0)) throw DomainError("fit_controls: dt must be positive");
  const double phi = std::clamp(normalize_angle(to.yaw - from.yaw) / dt, -phi_max, phi_max);
  const double v = std::hypot(to.x - from.x, to.y - from.y) / dt;
  return {phi, v};
}

Control clamp_control(const Control& control, double phi_max) {
  return {std::clamp(control.phi, -phi_max, phi_max), std::max(control.v, 0.0)};
}

}  // namespace reactsim
