#include "reactsim/policies.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "reactsim/errors.hpp"

namespace reactsim {

const AgentState& acting_agent(const SimState& prev, AgentId id) {
  const AgentState* a = prev.find(id);
  if (a == nullptr) throw DomainError("policy: unknown agent id " + std::to_string(id));
  if (!a->active) throw DomainError("policy: agent " + std::to_string(id) + " is inactive");
  return *a;
}

PolicyDecision ConstantVelocityPolicy::act(AgentId agent, const SimState& prev, const StepContext&, RngStream&) const {
  return {{0.0, acting_agent(prev, agent).speed}, std::nullopt, false};
}

LogReplayPolicy::LogReplayPolicy(std::shared_ptr<const Episode> log) : log_(std::move(log)) {
  if (!log_ || log_->states.empty()) throw DomainError("log replay needs a non-empty episode");
}

PolicyDecision LogReplayPolicy::act(AgentId agent, const SimState& prev, const StepContext&, RngStream&) const {
  const AgentState& current = acting_agent(prev, agent);
  const std::int64_t offset = prev.step_index + 1 - log_->states.front().step_index;
  if (offset >= 0 && offset < static_cast<std::int64_t>(log_->states.size())) {
    if (const AgentState* rec = log_->states[static_cast<std::size_t>(offset)].find(agent)) {
      return {{0.0, rec->speed}, rec->pose, !rec->active};
    }
  }
  return {{0.0, 0.0}, current.pose, false};
}

double follow_acceleration(double v, double v0, double gap, double dv, const FollowParams& p) {
  const double dynamic = v * p.time_headway + v * dv / (2.0 * std::sqrt(p.a_max * p.b));
  const double desired = p.s0 + std::max(0.0, dynamic);
  const double s = std::max(gap, 0.01);
  const double ratio = v / v0;
  return p.a_max * (1.0 - ratio * ratio * ratio * ratio - (desired / s) * (desired / s));
}

namespace {

LaneId pick_successor(const Lane& lane, AgentId agent) {
  const auto n = static_cast<std::uint64_t>(lane.successors.size());
  return lane.successors[hash_combine(static_cast<std::uint64_t>(agent), static_cast<std::uint64_t>(lane.id)) % n];
}

constexpr int kMaxRouteLanes = 16;

}  // namespace

std::optional<LaneRoute> build_route(const AgentState& agent, const SimState& prev, const StepContext& ctx,
                                     const FollowParams& params) {
  if (ctx.map == nullptr || ctx.map->lanes().empty()) return std::nullopt;
  const SemanticMap& map = *ctx.map;
  const LaneProjection proj = match_lane(map, agent.pose, std::numbers::pi / 2.0);
  const Lane* lane = &map.lane(proj.lane);

  LaneRoute route;
  route.lane_width = lane->width;
  route.speed_limit = lane->speed_limit;
  std::vector<Vec2> points = lane->centerline.points();
  double path_length = lane->centerline.length();
  const double time = ctx.time_of(prev);
  const double needed =
      proj.arclength + params.gap_cap + std::max(params.min_lookahead, agent.speed * params.lookahead_time) + agent.extent.length;
  for (int depth = 0; path_length < needed && !lane->successors.empty() && depth < kMaxRouteLanes; ++depth) {
    const Lane& next = map.lane(pick_successor(*lane, agent.id));
    const bool closed = next.light_id && (params.stop_at_all_lights || !map.lane_open(next, time));
    if (closed && !route.stop_arclength) route.stop_arclength = path_length;
    const auto& np = next.centerline.points();
    const bool joined = np.front() == points.back();
    if (!joined) path_length += distance(points.back(), np.front());
    points.insert(points.end(), np.begin() + (joined ? 1 : 0), np.end());
    path_length += next.centerline.length();
    lane = &next;
  }
  route.path = Polyline(std::move(points));
  route.agent_arclength = proj.arclength;
  route.lateral_offset = proj.lateral_offset;
  route.heading_error = normalize_angle(agent.pose.yaw - route.path.tangent_at(proj.arclength));

  for (const AgentState& other : prev.agents) {
    if (other.id == agent.id || !other.active) continue;
    if (distance(other.pose.position(), agent.pose.position()) > params.gap_cap + route.path.length()) continue;
    const PolylineProjection p = route.path.project(other.pose.position());
    if (p.arclength <= route.agent_arclength) continue;
    const double rel = other.pose.yaw - route.path.tangent_at(p.arclength);
    const double c = std::abs(std::cos(rel));
    const double s = std::abs(std::sin(rel));
    const double half_lateral = s * other.extent.length / 2.0 + c * other.extent.width / 2.0;
    if (std::abs(p.lateral) - half_lateral >= route.lane_width / 2.0) continue;
    const double half_longitudinal = c * other.extent.length / 2.0 + s * other.extent.width / 2.0;
    const double gap = p.arclength - route.agent_arclength - agent.extent.length / 2.0 - half_longitudinal;
    if (gap > params.gap_cap) continue;
    if (!route.lead || gap < route.lead->gap) route.lead = LaneRoute::Lead{other.id, gap, other.speed * std::cos(rel)};
  }
  return route;
}

namespace {

bool past_end(const Pose2& pose, const Polyline& path, double arclength) {
  if (arclength < path.length() - 1e-9) return false;
  return dot(pose.position() - path.points().back(), unit_from_yaw(path.tangent_at(path.length()))) > 0.0;
}

}  // namespace

double pure_pursuit(const Pose2& pose, const Polyline& path, double agent_arclength, double lookahead, double v_cmd,
                    double phi_max) {
  if (past_end(pose, path, agent_arclength)) return 0.0;
  const double target_s = agent_arclength + lookahead;
  Vec2 target;
  if (target_s <= path.length()) {
    target = path.point_at(target_s);
  } else {
    // Continue along the final tangent.
    target = path.points().back() + (target_s - path.length()) * unit_from_yaw(path.tangent_at(path.length()));
  }
  const Vec2 local = pose.to_local(target);
  const double d2 = dot(local, local);
  if (d2 < 1e-12) return 0.0;
  const double curvature = 2.0 * local.y / d2;
  return std::clamp(v_cmd * curvature, -phi_max, phi_max);
}

namespace {

double lookahead_for(const AgentState& a, const FollowParams& p) {
  return std::max(p.min_lookahead, a.speed * p.lookahead_time);
}

double stop_gap(const AgentState& a, const LaneRoute& route) {
  if (!route.stop_arclength) return -1.0;
  return *route.stop_arclength - route.agent_arclength - a.extent.length / 2.0;
}

}  // namespace

PolicyDecision ReactiveFollowPolicy::act(AgentId agent, const SimState& prev, const StepContext& ctx,
                                         RngStream& rng) const {
  const AgentState& a = acting_agent(prev, agent);
  const std::optional<LaneRoute> route = build_route(a, prev, ctx, params_);
  if (!route) return ConstantVelocityPolicy{}.act(agent, prev, ctx, rng);

  const double v = a.speed;
  const double v0 = params_.v0.value_or(route->speed_limit);
  const double lead_gap = route->lead ? route->lead->gap : params_.gap_cap;
  const double dv = route->lead ? v - route->lead->speed_along : 0.0;
  double acc = follow_acceleration(v, v0, lead_gap, dv, params_);
  const double to_stop = stop_gap(a, *route);
  if (to_stop > 0.0) acc = std::min(acc, follow_acceleration(v, v0, to_stop, v, params_));

  const double v_cmd = std::clamp(v + acc * ctx.dt, 0.0, v0);
  const double phi =
      pure_pursuit(a.pose, route->path, route->agent_arclength, lookahead_for(a, params_), v_cmd, ctx.phi_max);
  return {{phi, v_cmd}, std::nullopt, false};
}

PathOverridePolicy::PathOverridePolicy(PolicyPtr inner, Polyline path, FollowParams params)
    : inner_(std::move(inner)), path_(std::move(path)), params_(params) {
  if (!inner_) throw DomainError("path override needs an inner policy");
  if (path_.size() < 2) throw DomainError("path override needs a path with >= 2 points");
}

PolicyDecision PathOverridePolicy::act(AgentId agent, const SimState& prev, const StepContext& ctx,
                                       RngStream& rng) const {
  const AgentState& a = acting_agent(prev, agent);
  const PolicyDecision inner = inner_->act(agent, prev, ctx, rng);
  const double v_cmd = std::max(0.0, inner.control.v);
  const PolylineProjection p = path_.project(a.pose.position());
  const double phi = pure_pursuit(a.pose, path_, p.arclength, lookahead_for(a, params_), v_cmd, ctx.phi_max);
  return {{phi, v_cmd}, std::nullopt, false};
}

PolicyPtr path_override_wrap(PolicyPtr inner, Polyline path) {
  return std::make_shared<PathOverridePolicy>(std::move(inner), std::move(path));
}

FeatureVector extract_features(AgentId agent, const SimState& prev, const StepContext& ctx, const FollowParams& params) {
  const AgentState& a = acting_agent(prev, agent);
  FeatureVector f{};
  f[0] = a.speed;
  f[1] = params.gap_cap;
  f[6] = params.gap_cap;
  f[7] = 1.0;
  const std::optional<LaneRoute> route = build_route(a, prev, ctx, params);
  if (!route) return f;
  if (route->lead) {
    f[1] = std::clamp(route->lead->gap, -params.gap_cap, params.gap_cap);
    f[2] = a.speed - route->lead->speed_along;
  }
  f[3] = route->lateral_offset;
  f[4] = route->heading_error;
  const double lookahead = lookahead_for(a, params);
  const double s_ahead = std::min(route->agent_arclength + lookahead, route->path.length());
  f[5] = normalize_angle(route->path.tangent_at(s_ahead) - route->path.tangent_at(route->agent_arclength)) / lookahead;
  const double to_stop = stop_gap(a, *route);
  if (to_stop > 0.0) f[6] = std::min(to_stop, params.gap_cap);
  return f;
}

LearnedPolicy::LearnedPolicy(Mlp model, FollowParams feature_params)
    : model_(std::move(model)), feature_params_(feature_params) {
  model_.validate();
}

PolicyDecision LearnedPolicy::act(AgentId agent, const SimState& prev, const StepContext& ctx, RngStream&) const {
  const FeatureVector f = extract_features(agent, prev, ctx, feature_params_);
  return {clamp_control(mlp_forward(model_, f), ctx.phi_max), std::nullopt, false};
}

std::vector<TrainingSample> build_bc_dataset(std::span<const Episode> episodes, const SemanticMap& map,
                                             double phi_max) {
  std::vector<TrainingSample> out;
  if (episodes.empty()) return out;
  const double dt = episodes.front().dt;
  const auto history = static_cast<std::size_t>(std::ceil(1.0 / dt - 1e-9));
  for (const Episode& e : episodes) {
    if (e.dt != dt) throw DomainError("build_bc_dataset: episodes have different dt");
    const StepContext ctx{&map, dt, phi_max, 0};
    for (std::size_t t = history + 1; t < e.states.size(); ++t) {
      const SimState& prev = e.states[t - 1];
      const SimState& cur = e.states[t];
      for (const AgentState& a : prev.agents) {
        if (a.id == prev.ego_id) continue;
        bool observed = true;
        for (std::size_t k = t - 1 - history; k <= t && observed; ++k) {
          const AgentState* h = e.states[k].find(a.id);
          observed = h != nullptr && h->active;
        }
        if (!observed) continue;
        out.push_back({extract_features(a.id, prev, ctx), fit_controls(a.pose, cur.agent(a.id).pose, dt, phi_max)});
      }
    }
  }
  return out;
}

void PolicySet::set_default(PolicyPtr policy) {
  for (AgentKind k : {AgentKind::vehicle, AgentKind::pedestrian, AgentKind::cyclist}) by_kind_[k] = policy;
}

const Policy* PolicySet::find(const AgentState& agent) const {
  if (const auto it = by_agent_.find(agent.id); it != by_agent_.end()) return it->second.get();
  if (const auto it = by_kind_.find(agent.kind); it != by_kind_.end()) return it->second.get();
  return nullptr;
}

const Policy& PolicySet::for_agent(const AgentState& agent) const {
  const Policy* p = find(agent);
  if (p == nullptr) throw DomainError("no policy assigned to agent " + std::to_string(agent.id));
  return *p;
}

PolicyPtr PolicySet::shared_for(const AgentState& agent) const {
  if (const auto it = by_agent_.find(agent.id); it != by_agent_.end()) return it->second;
  if (const auto it = by_kind_.find(agent.kind); it != by_kind_.end()) return it->second;
  throw DomainError("no policy assigned to agent " + std::to_string(agent.id));
}

}  // namespace reactsim
