#ifndef REACTSIM_KINEMATICS_HPP
#define REACTSIM_KINEMATICS_HPP

#include "reactsim/types.hpp"

namespace reactsim {

inline constexpr double kDefaultPhiMax = 1.5;  // [rad/s]

// Yaw-rate / speed command pair.
struct Control {
  double phi = 0.0;  // [rad/s]
  double v = 0.0;    // [m/s]

  friend bool operator==(const Control&, const Control&) = default;
};

// Unicycle step, heading first:
//   yaw' = normalize(yaw + phi*dt), p' = p + v*dt*(cos yaw', sin yaw'), speed' = v.
// Throws DomainError on non-finite input, dt <= 0, v < 0 or |phi| > phi_max.
AgentState advance(const AgentState& agent, const Control& control, double dt, double phi_max = kDefaultPhiMax);

// Inverse of advance on its reachable set. phi is clamped to +-phi_max.
Control fit_controls(const Pose2& from, const Pose2& to, double dt, double phi_max = kDefaultPhiMax);

// Clamps v to >= 0 and phi to +-phi_max.
Control clamp_control(const Control& control, double phi_max = kDefaultPhiMax);

}  // namespace reactsim

#endif  // REACTSIM_KINEMATICS_HPP
