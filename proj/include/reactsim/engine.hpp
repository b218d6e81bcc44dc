#ifndef REACTSIM_ENGINE_HPP
#define REACTSIM_ENGINE_HPP

#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "reactsim/initstate.hpp"
#include "reactsim/policies.hpp"

namespace reactsim {

struct ControlNoise {
  double sigma_phi = 0.0;  // [rad/s]
  double sigma_v = 0.0;    // [m/s]
};

struct SimConfig {
  double dt = 0.1;
  int horizon_steps = 50;  // transitions after s1; the episode holds up to horizon_steps + 1 states
  std::uint64_t seed = 0;
  bool interrupt_on_ego_collision = true;
  ControlNoise control_noise;
  double roi_radius = 200.0;  // agents farther than this from the ego are deactivated
  double phi_max = kDefaultPhiMax;
  int jobs = 1;  // worker threads for per-agent evaluation; results do not depend on it

  void validate() const;
};

// The SDV's control loop: returns the ego at step prev.step_index + 1. Must be deterministic.
class EgoController {
 public:
  virtual ~EgoController() = default;
  virtual AgentState drive(const SimState& prev, const AgentState& ego, const StepContext& ctx) const = 0;
  virtual std::string name() const = 0;
};

using EgoPtr = std::shared_ptr<const EgoController>;

class StationaryEgo final : public EgoController {
 public:
  AgentState drive(const SimState& prev, const AgentState& ego, const StepContext& ctx) const override;
  std::string name() const override { return "stationary"; }
};

// Follows the ego track of a recorded episode exactly; holds the last pose once the log ends.
class LogReplayEgo final : public EgoController {
 public:
  explicit LogReplayEgo(std::shared_ptr<const Episode> log);
  AgentState drive(const SimState& prev, const AgentState& ego, const StepContext& ctx) const override;
  std::string name() const override { return "log_replay"; }

 private:
  std::shared_ptr<const Episode> log_;
};

// Drives the ego with any agent policy (noise-free), using the ego's own rng stream.
class PolicyEgo final : public EgoController {
 public:
  explicit PolicyEgo(PolicyPtr policy);
  AgentState drive(const SimState& prev, const AgentState& ego, const StepContext& ctx) const override;
  std::string name() const override { return policy_->name(); }

 private:
  PolicyPtr policy_;
};

// Applies a policy decision to an agent (override or kinematic integration).
AgentState apply_decision(const AgentState& agent, const PolicyDecision& decision, double dt, double phi_max);

// First active agent (in state order) whose footprint overlaps the ego's.
std::optional<AgentId> first_ego_contact(const SimState& state);

// One synchronous transition: every active non-ego agent acts on `prev` alone, the ego is driven
// by `ego`, and the results form the state with step_index t (which must be prev.step_index + 1).
SimState step(const SimState& prev, const PolicySet& policies, const EgoController& ego, const SemanticMap& map,
              const SimConfig& cfg, std::int64_t t);

Episode unroll(const SimState& s1, const PolicySet& policies, const EgoController& ego, const SemanticMap& map,
               const SimConfig& cfg);

enum class Mode { full, journey, scenario, behaviour };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view name);

struct EmpiricalSampler {
  std::shared_ptr<const std::vector<Episode>> dataset;
  double radius = std::numeric_limits<double>::infinity();
};

using StateSampler = std::variant<ProceduralConfig, EmpiricalSampler>;

struct BehaviourOverride {
  AgentId agent = 0;
  Polyline path;
};

struct ModeInputs {
  std::shared_ptr<const SemanticMap> map;
  PolicySet policies;
  EgoPtr ego;
  StateSampler sampler = ProceduralConfig{};
  std::optional<Pose2> location;      // journey
  std::optional<SimState> initial;    // scenario, behaviour
  std::vector<BehaviourOverride> behaviour;
};

// Initial state for a mode: sampled for full/journey (seeded by cfg.seed), given otherwise.
SimState initial_state_for(Mode mode, const ModeInputs& inputs, const SimConfig& cfg);

Episode run_mode(Mode mode, const ModeInputs& inputs, const SimConfig& cfg);

}  // namespace reactsim

#endif  // REACTSIM_ENGINE_HPP
