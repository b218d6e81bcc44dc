#ifndef REACTSIM_POLICIES_HPP
#define REACTSIM_POLICIES_HPP

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reactsim/kinematics.hpp"
#include "reactsim/mlp.hpp"
#include "reactsim/rng.hpp"
#include "reactsim/semantic_map.hpp"
#include "reactsim/types.hpp"

namespace reactsim {

// Everything a policy may read besides the previous state.
struct StepContext {
  const SemanticMap* map = nullptr;
  double dt = 0.1;
  double phi_max = kDefaultPhiMax;
  std::uint64_t seed = 0;

  double time_of(const SimState& s) const { return dt * static_cast<double>(s.step_index); }
};

struct PolicyDecision {
  Control control;
  // When set the engine places the agent exactly here instead of integrating `control`;
  // control.v then becomes the agent's speed.
  std::optional<Pose2> pose_override;
  bool deactivate = false;
};

// Per-agent transition p(z_t | s_{t-1}). Implementations are immutable and reentrant; any
// randomness comes from the per-(seed, agent, step) stream handed in by the engine.
class Policy {
 public:
  virtual ~Policy() = default;
  // Throws DomainError when `agent` is not an active member of `prev`.
  virtual PolicyDecision act(AgentId agent, const SimState& prev, const StepContext& ctx, RngStream& rng) const = 0;
  virtual std::string name() const = 0;
};

using PolicyPtr = std::shared_ptr<const Policy>;

// The active agent `id` in `prev`, or DomainError.
const AgentState& acting_agent(const SimState& prev, AgentId id);

class ConstantVelocityPolicy final : public Policy {
 public:
  PolicyDecision act(AgentId agent, const SimState& prev, const StepContext& ctx, RngStream& rng) const override;
  std::string name() const override { return "constant_velocity"; }
};

// Places each agent at its recorded pose for the next step. Past the end of the log, or when the
// agent is missing from it, the agent holds its last pose at zero speed.
class LogReplayPolicy final : public Policy {
 public:
  explicit LogReplayPolicy(std::shared_ptr<const Episode> log);
  PolicyDecision act(AgentId agent, const SimState& prev, const StepContext& ctx, RngStream& rng) const override;
  std::string name() const override { return "log_replay"; }

 private:
  std::shared_ptr<const Episode> log_;
};

struct FollowParams {
  double a_max = 1.5;            // [m/s^2]
  double b = 2.0;                // comfortable deceleration [m/s^2]
  double s0 = 2.0;               // standstill gap [m]
  double time_headway = 1.5;     // [s]
  std::optional<double> v0;      // desired speed; lane speed limit when unset
  double gap_cap = 100.0;        // [m], free-road gap
  double lookahead_time = 1.0;   // [s]
  double min_lookahead = 3.0;    // [m]
  // Treat every light-controlled lane as closed (a passive planner probe).
  bool stop_at_all_lights = false;
};

// Car-following acceleration with the dynamic part of the desired gap floored at zero.
double follow_acceleration(double v, double v0, double gap, double dv, const FollowParams& p);

// The road ahead of an agent as seen by the lane-following policies: the agent's matched lane
// followed by a deterministic chain of successors.
struct LaneRoute {
  Polyline path;
  double agent_arclength = 0.0;
  double lateral_offset = 0.0;
  double heading_error = 0.0;
  double lane_width = 3.5;
  double speed_limit = 10.0;
  std::optional<double> stop_arclength;  // start of the first closed lane ahead

  struct Lead {
    AgentId id = 0;
    double gap = 0.0;  // bumper to bumper along the route [m]
    double speed_along = 0.0;
  };
  std::optional<Lead> lead;
};

// Route for `agent` in `prev`; nullopt when the map has no lanes.
std::optional<LaneRoute> build_route(const AgentState& agent, const SimState& prev, const StepContext& ctx,
                                     const FollowParams& params);

// Pure-pursuit yaw rate toward the point `lookahead` meters ahead on `path`, for commanded speed
// `v_cmd`. Zero once the agent is past the end of the path.
double pure_pursuit(const Pose2& pose, const Polyline& path, double agent_arclength, double lookahead, double v_cmd,
                    double phi_max);

class ReactiveFollowPolicy final : public Policy {
 public:
  explicit ReactiveFollowPolicy(FollowParams params = {}) : params_(params) {}
  PolicyDecision act(AgentId agent, const SimState& prev, const StepContext& ctx, RngStream& rng) const override;
  std::string name() const override { return params_.stop_at_all_lights ? "stop_at_lights" : "reactive_follow"; }
  const FollowParams& params() const { return params_; }

 private:
  FollowParams params_;
};

// Steering follows a fixed path; speed comes from the wrapped policy.
class PathOverridePolicy final : public Policy {
 public:
  PathOverridePolicy(PolicyPtr inner, Polyline path, FollowParams params = {});
  PolicyDecision act(AgentId agent, const SimState& prev, const StepContext& ctx, RngStream& rng) const override;
  std::string name() const override { return "path_override(" + inner_->name() + ")"; }
  const Polyline& path() const { return path_; }

 private:
  PolicyPtr inner_;
  Polyline path_;
  FollowParams params_;
};

PolicyPtr path_override_wrap(PolicyPtr inner, Polyline path);

// Feature vector for `agent` in `prev` (see FeatureVector for the layout).
FeatureVector extract_features(AgentId agent, const SimState& prev, const StepContext& ctx,
                               const FollowParams& params = {});

class LearnedPolicy final : public Policy {
 public:
  explicit LearnedPolicy(Mlp model, FollowParams feature_params = {});
  PolicyDecision act(AgentId agent, const SimState& prev, const StepContext& ctx, RngStream& rng) const override;
  std::string name() const override { return "learned"; }
  const Mlp& model() const { return model_; }

 private:
  Mlp model_;
  FollowParams feature_params_;
};

// Behavioral-cloning samples: for every non-ego agent active for the ceil(1 s / dt) steps before
// t-1 as well as at t-1 and t, (features at t-1, fit_controls(pose_{t-1}, pose_t)).
std::vector<TrainingSample> build_bc_dataset(std::span<const Episode> episodes, const SemanticMap& map,
                                             double phi_max = kDefaultPhiMax);

// Policy lookup: per-agent assignments first, then per-kind defaults.
class PolicySet {
 public:
  PolicySet() = default;

  void set_default(AgentKind kind, PolicyPtr policy) { by_kind_[kind] = std::move(policy); }
  void set_default(PolicyPtr policy);  // all kinds
  void assign(AgentId id, PolicyPtr policy) { by_agent_[id] = std::move(policy); }

  // nullptr when unassigned.
  const Policy* find(const AgentState& agent) const;
  // Throws DomainError when unassigned.
  const Policy& for_agent(const AgentState& agent) const;
  PolicyPtr shared_for(const AgentState& agent) const;

 private:
  std::map<AgentId, PolicyPtr> by_agent_;
  std::map<AgentKind, PolicyPtr> by_kind_;
};

}  // namespace reactsim

#endif  // REACTSIM_POLICIES_HPP
