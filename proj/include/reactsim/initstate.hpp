#ifndef REACTSIM_INITSTATE_HPP
#define REACTSIM_INITSTATE_HPP

#include <limits>
#include <span>

#include "reactsim/raster.hpp"
#include "reactsim/rng.hpp"
#include "reactsim/semantic_map.hpp"
#include "reactsim/types.hpp"

namespace reactsim {

struct ProceduralConfig {
  double agents_mean = 5.0;  // Poisson mean of the candidate count
  double min_gap = 8.0;      // [m], bumper to bumper
  double speed_min = 0.0;    // [m/s]
  double speed_max = 12.0;   // [m/s]
  Extent ego_extent{4.5, 2.0};
  Extent agent_extent{4.5, 2.0};
  // Candidates farther than this from the ego location are rejected.
  double placement_radius = std::numeric_limits<double>::infinity();
  int max_attempts = 100;  // per candidate
  // Agents beside each other in different lanes need at least this much lateral clearance.
  double lateral_clearance = 0.5;

  void validate() const;
};

// Uniform over total centerline arclength, lanes weighted by length.
Pose2 sample_location(const SemanticMap& map, RngStream& rng);

// A recorded state whose ego lies within `radius` of `location`, rigidly moved so its ego pose
// equals `location`. Step index is reset to 0.
SimState sample_state_empirical(std::span<const Episode> dataset, const Pose2& location, double radius,
                                RngStream& rng);

// Ego (id 0) at `location`; Poisson(agents_mean) candidates on lanes with rejection.
SimState sample_state_procedural(const SemanticMap& map, const Pose2& location, const ProceduralConfig& cfg,
                                 RngStream& rng);

// Rigid transform taking `state`'s ego pose onto `location`.
SimState reanchor(const SimState& state, const Pose2& location);

inline constexpr double kDefaultExtractedSpeed = 5.0;

// Vectorizes the ego and agents channels. Exactly one ego component is required.
SimState state_from_raster(const Grid& grid, double default_speed = kDefaultExtractedSpeed,
                           int min_pixels = kDefaultMinPixels);

}  // namespace reactsim

#endif  // REACTSIM_INITSTATE_HPP
