#ifndef REACTSIM_SVG_HPP
#define REACTSIM_SVG_HPP

#include <string>

#include "reactsim/semantic_map.hpp"
#include "reactsim/types.hpp"

namespace reactsim {

// Frame `offset` of an episode: lane centerlines and crosswalks (when a map is given), agent
// rectangles with the ego highlighted, and trails up to the frame. Output is byte-stable.
std::string svg_frame(const Episode& episode, std::size_t offset, const SemanticMap* map);

// Every agent's full trajectory over the map.
std::string svg_overview(const Episode& episode, const SemanticMap* map);

}  // namespace reactsim

#endif  // REACTSIM_SVG_HPP
