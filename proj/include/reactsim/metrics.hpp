#ifndef REACTSIM_METRICS_HPP
#define REACTSIM_METRICS_HPP

#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "reactsim/engine.hpp"

namespace reactsim {

struct RealismReport {
  std::vector<double> horizons;  // [s]
  std::vector<double> mean_l2;   // [m], one per horizon
  int n_agents = 0;              // distinct (scene, agent) pairs compared
  int n_scenes = 0;
};

// Mean ego-excluded center distance between paired simulated and ground-truth episodes at each
// horizon, over every agent active in both. Pairs must share dt and s1; horizons must be
// multiples of dt inside both episodes.
RealismReport displacement_error(std::span<const Episode> sims, std::span<const Episode> gts,
                                 std::span<const double> horizons);
RealismReport displacement_error(const Episode& sim, const Episode& gt, std::span<const double> horizons);

inline const std::vector<double> kDefaultHorizons = {0.5, 1.0, 2.0, 3.0, 4.0, 5.0};

struct ReactivityReport {
  int scenes_total = 0;
  int scenes_without_collision = 0;
  double reactivity = 0.0;
};

// In static-lead scenes the lead is the (stationary) ego and the follower is agent 1.
inline constexpr AgentId kLeadId = 0;
inline constexpr AgentId kFollowerId = 1;

// Static lead and a lane-aligned follower `gap` meters (bumper to bumper) behind it on the
// map's lowest-id lane, which must be straight and long enough to hold both.
SimState make_static_lead_scene(double gap, double follower_speed, const SemanticMap& map,
                                Extent follower_extent = {}, Extent lead_extent = {});

struct StaticLeadSuiteConfig {
  int scenes = 100;
  double gap_min = 10.0;
  double gap_max = 40.0;
  double speed_min = 5.0;
  double speed_max = 12.0;
  double horizon = 5.0;  // [s]
  // Keep only scenes where a non-braking follower reaches the lead within the horizon.
  bool require_reaction = true;
};

std::vector<SimState> make_static_lead_suite(const StaticLeadSuiteConfig& cfg, std::uint64_t seed,
                                             const SemanticMap& map);

// Builds the follower policy for suite scene `index`.
using SubjectFactory = std::function<PolicyPtr(std::size_t index, const SimState& scene)>;

// Unrolls each scene with the subject on the follower and a stationary lead; a scene is
// collision-free iff follower and lead never overlap. Scenes run on cfg.jobs threads.
ReactivityReport reactivity(std::span<const SimState> suite, const SubjectFactory& subject, const SemanticMap& map,
                            const SimConfig& cfg);

// The non-reactive reference log for a static-lead scene: the follower keeps its speed and drives
// through the lead.
Episode constant_speed_log(const SimState& scene, const SemanticMap& map, const SimConfig& cfg);

enum class CollisionKind { front, side, rear };
std::string_view to_string(CollisionKind kind);

// Direction of the contact between overlapping agents, from the azimuth (in the ego frame) of
// the centroid of their intersection region: |az| <= 45 deg front, >= 135 deg rear, else side.
CollisionKind classify_collision(const AgentState& ego, const AgentState& other);

struct PlannerThresholds {
  double d_thresh = 5.0;   // [m], final ego displacement from reference
  double window = 3.0;     // [s], passiveness window
  double kappa = 0.5;      // passiveness speed ratio
  double g_free = 10.0;    // [m], front gap that counts as clear road
  double l_thresh = 2.0;   // [m], distance to the reference path
};

struct SceneEvents {
  std::optional<CollisionKind> collision;
  bool displacement = false;
  bool passiveness = false;
  bool off_reference = false;
};

struct PlannerReport {
  int scenes = 0;
  int front_collisions = 0;
  int side_collisions = 0;
  int rear_collisions = 0;
  int displacement_errors = 0;
  int passiveness = 0;
  int distance_to_reference = 0;
};

// Bumper-to-bumper distance to the nearest active agent ahead of the ego in its own corridor.
double front_gap(const SimState& state);

SceneEvents evaluate_scene(const Episode& episode, const Episode& reference, const PlannerThresholds& thresholds);

PlannerReport planner_eval(std::span<const Episode> episodes, std::span<const Episode> references,
                           const PlannerThresholds& thresholds = {});

// Overlapping non-ego agent pairs summed over all states (agent-agent contacts do not terminate).
int count_agent_contacts(const Episode& episode);

}  // namespace reactsim

#endif  // REACTSIM_METRICS_HPP
