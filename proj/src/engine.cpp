#include "reactsim/engine.hpp"

#include <cmath>
#include <random>

#include "reactsim/errors.hpp"
#include "reactsim/parallel.hpp"

namespace reactsim {

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("sim dt must be positive");
  if (horizon_steps < 1) throw DomainError("sim horizon must be >= 1");
  if (!(roi_radius > 0.0)) throw DomainError("roi_radius must be positive");
  if (!(phi_max > 0.0)) throw DomainError("phi_max must be positive");
  if (control_noise.sigma_phi < 0.0 || control_noise.sigma_v < 0.0) throw DomainError("noise sigmas must be >= 0");
}

AgentState StationaryEgo::drive(const SimState&, const AgentState& ego, const StepContext&) const {
  AgentState next = ego;
  next.speed = 0.0;
  return next;
}

LogReplayEgo::LogReplayEgo(std::shared_ptr<const Episode> log) : log_(std::move(log)) {
  if (!log_ || log_->states.empty()) throw DomainError("log replay ego needs a non-empty episode");
}

AgentState LogReplayEgo::drive(const SimState& prev, const AgentState& ego, const StepContext&) const {
  const std::int64_t offset = prev.step_index + 1 - log_->states.front().step_index;
  if (offset >= 0 && offset < static_cast<std::int64_t>(log_->states.size())) {
    if (const AgentState* rec = log_->states[static_cast<std::size_t>(offset)].find(ego.id)) return *rec;
  }
  AgentState held = ego;
  held.speed = 0.0;
  return held;
}

PolicyEgo::PolicyEgo(PolicyPtr policy) : policy_(std::move(policy)) {
  if (!policy_) throw DomainError("policy ego needs a policy");
}

AgentState PolicyEgo::drive(const SimState& prev, const AgentState& ego, const StepContext& ctx) const {
  RngStream rng(ctx.seed, ego.id, prev.step_index + 1);
  return apply_decision(ego, policy_->act(ego.id, prev, ctx, rng), ctx.dt, ctx.phi_max);
}

AgentState apply_decision(const AgentState& agent, const PolicyDecision& decision, double dt, double phi_max) {
  if (decision.pose_override) {
    AgentState next = agent;
    next.pose = *decision.pose_override;
    next.speed = std::max(0.0, decision.control.v);
    next.active = !decision.deactivate;
    return next;
  }
  AgentState next = advance(agent, clamp_control(decision.control, phi_max), dt, phi_max);
  if (decision.deactivate) next.active = false;
  return next;
}

std::optional<AgentId> first_ego_contact(const SimState& state) {
  const AgentState& ego = state.ego();
  const Obb ego_box = ego.footprint();
  for (const AgentState& a : state.agents) {
    if (a.id == state.ego_id || !a.active) continue;
    if (obb_overlap(ego_box, a.footprint())) return a.id;
  }
  return std::nullopt;
}

SimState step(const SimState& prev, const PolicySet& policies, const EgoController& ego, const SemanticMap& map,
              const SimConfig& cfg, std::int64_t t) {
  cfg.validate();
  if (t != prev.step_index + 1) throw DomainError("step index must follow the previous state");
  const StepContext ctx{&map, cfg.dt, cfg.phi_max, cfg.seed};

  const std::size_t n = prev.agents.size();
  std::vector<const Policy*> assigned(n, nullptr);
  std::size_t ego_index = n;
  for (std::size_t i = 0; i < n; ++i) {
    const AgentState& a = prev.agents[i];
    if (a.id == prev.ego_id) {
      ego_index = i;
    } else if (a.active) {
      assigned[i] = &policies.for_agent(a);
    }
  }
  if (ego_index == n) throw DomainError("previous state has no ego");

  SimState next;
  next.step_index = t;
  next.ego_id = prev.ego_id;
  next.agents = prev.agents;
  const ControlNoise noise = cfg.control_noise;
  parallel_for(n, cfg.jobs, [&](std::size_t i) {
    if (assigned[i] == nullptr) return;
    const AgentState& a = prev.agents[i];
    RngStream rng(cfg.seed, a.id, t);
    PolicyDecision d = assigned[i]->act(a.id, prev, ctx, rng);
    if (!d.pose_override && (noise.sigma_phi > 0.0 || noise.sigma_v > 0.0)) {
      std::normal_distribution<double> gauss(0.0, 1.0);
      d.control.phi += noise.sigma_phi * gauss(rng);
      d.control.v += noise.sigma_v * gauss(rng);
    }
    next.agents[i] = apply_decision(a, d, cfg.dt, cfg.phi_max);
  });

  const AgentState& ego_prev = prev.agents[ego_index];
  AgentState ego_next = ego.drive(prev, ego_prev, ctx);
  ego_next.id = ego_prev.id;
  ego_next.extent = ego_prev.extent;
  ego_next.kind = ego_prev.kind;
  next.agents[ego_index] = ego_next;

  for (std::size_t i = 0; i < n; ++i) {
    AgentState& a = next.agents[i];
    if (i != ego_index && a.active && distance(a.pose.position(), ego_next.pose.position()) > cfg.roi_radius) {
      a.active = false;
    }
  }
  return next;
}

Episode unroll(const SimState& s1, const PolicySet& policies, const EgoController& ego, const SemanticMap& map,
               const SimConfig& cfg) {
  cfg.validate();
  validate(s1);
  Episode e;
  e.dt = cfg.dt;
  e.map_id = map.id();
  e.states.reserve(static_cast<std::size_t>(cfg.horizon_steps) + 1);
  e.states.push_back(s1);
  for (int k = 1; k <= cfg.horizon_steps; ++k) {
    e.states.push_back(step(e.states.back(), policies, ego, map, cfg, s1.step_index + k));
    if (cfg.interrupt_on_ego_collision && first_ego_contact(e.states.back())) {
      e.termination = Termination::ego_collision;
      return e;
    }
  }
  e.termination = Termination::completed;
  return e;
}

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::full: return "full";
    case Mode::journey: return "journey";
    case Mode::scenario: return "scenario";
    case Mode::behaviour: return "behaviour";
  }
  return "full";
}

Mode mode_from_string(std::string_view name) {
  if (name == "full") return Mode::full;
  if (name == "journey") return Mode::journey;
  if (name == "scenario") return Mode::scenario;
  if (name == "behaviour" || name == "behavior") return Mode::behaviour;
  throw DomainError("unknown mode '" + std::string(name) + "'");
}

namespace {

SimState sample_with(const StateSampler& sampler, const SemanticMap& map, const Pose2& location, RngStream& rng) {
  if (const auto* proc = std::get_if<ProceduralConfig>(&sampler)) {
    return sample_state_procedural(map, location, *proc, rng);
  }
  const auto& emp = std::get<EmpiricalSampler>(sampler);
  if (!emp.dataset) throw DomainError("empirical sampler has no dataset");
  return sample_state_empirical(*emp.dataset, location, emp.radius, rng);
}

}  // namespace

SimState initial_state_for(Mode mode, const ModeInputs& inputs, const SimConfig& cfg) {
  if (!inputs.map) throw DomainError("mode inputs need a map");
  const RngStream root(cfg.seed);
  switch (mode) {
    case Mode::full: {
      RngStream loc_rng = root.fork(1);
      RngStream state_rng = root.fork(2);
      const Pose2 location = sample_location(*inputs.map, loc_rng);
      return sample_with(inputs.sampler, *inputs.map, location, state_rng);
    }
    case Mode::journey: {
      if (!inputs.location) throw DomainError("journey mode needs a fixed ego location");
      RngStream state_rng = root.fork(2);
      return sample_with(inputs.sampler, *inputs.map, *inputs.location, state_rng);
    }
    case Mode::scenario:
    case Mode::behaviour:
      if (!inputs.initial) throw DomainError(std::string(to_string(mode)) + " mode needs an initial state");
      return *inputs.initial;
  }
  throw DomainError("unknown mode");
}

Episode run_mode(Mode mode, const ModeInputs& inputs, const SimConfig& cfg) {
  if (!inputs.ego) throw DomainError("mode inputs need an ego controller");
  const SimState s1 = initial_state_for(mode, inputs, cfg);
  if (mode != Mode::behaviour) return unroll(s1, inputs.policies, *inputs.ego, *inputs.map, cfg);

  if (inputs.behaviour.empty()) throw DomainError("behaviour mode needs at least one (agent, path) override");
  PolicySet policies = inputs.policies;
  for (const BehaviourOverride& o : inputs.behaviour) {
    const AgentState* a = s1.find(o.agent);
    if (a == nullptr || a->id == s1.ego_id) {
      throw DomainError("behaviour override for unknown or ego agent " + std::to_string(o.agent));
    }
    policies.assign(o.agent, path_override_wrap(inputs.policies.shared_for(*a), o.path));
  }
  return unroll(s1, policies, *inputs.ego, *inputs.map, cfg);
}

}  // namespace reactsim
