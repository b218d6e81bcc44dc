#ifndef REACTSIM_SCENARIOS_HPP
#define REACTSIM_SCENARIOS_HPP

#include <memory>

#include "reactsim/engine.hpp"

namespace reactsim {

// Parallel straight lanes along +x starting at x = 0, ids 1..lanes, lane k at y = (k-1)*spacing.
SemanticMap straight_map(double length = 300.0, int lanes = 1, double spacing = 3.5, std::string id = "straight");

// Counter-clockwise rounded-rectangle loop of 8 lanes (4 straights, 4 quarter arcs). Lane 5 (the
// top straight) is controlled by a light that is red over [3 s, 6 s).
SemanticMap ring_map(std::string id = "ring");

// Four-way intersection at the origin. West-east road: approach 1, box 2 (light 1, always green),
// exit 3. South-north road: approach 4, box 5 (light 2, always red), exit 6.
SemanticMap intersection_map(std::string id = "intersection");

// A full-mode episode with every participant (ego included) under the reactive car-follower.
Episode teacher_episode(std::shared_ptr<const SemanticMap> map, std::uint64_t seed, int horizon_steps,
                        const ProceduralConfig& sampler = {});

enum class TrafficMode { log_replay, reactive };
std::string_view to_string(TrafficMode mode);
TrafficMode traffic_mode_from_string(std::string_view name);

// Intersection approach: ego (id 0) heading east towards a green light, a trailing car (id 1)
// 4-8 m behind it, and cross traffic held by the red light. The reference is the same scene
// with a reactive ego that drives through.
struct PlannerFixture {
  SimState s1;
  Episode reference;
};

PlannerFixture make_intersection_fixture(const SemanticMap& map, std::uint64_t seed, const SimConfig& cfg);

// Runs `probe` as the ego with the rest of the traffic either replaying the reference or reacting.
Episode run_planner_probe(const PlannerFixture& fixture, const SemanticMap& map, const EgoController& probe,
                          TrafficMode traffic, const SimConfig& cfg);

// Ego controller that treats every light-controlled lane as red.
EgoPtr stop_at_green_ego();

}  // namespace reactsim

#endif  // REACTSIM_SCENARIOS_HPP
