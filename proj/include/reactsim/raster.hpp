#ifndef REACTSIM_RASTER_HPP
#define REACTSIM_RASTER_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "reactsim/semantic_map.hpp"
#include "reactsim/types.hpp"

namespace reactsim {

enum class Channel : std::size_t { lanes = 0, crosswalks = 1, ego = 2, agents = 3 };
inline constexpr std::size_t kChannelCount = 4;
inline constexpr std::array<Channel, kChannelCount> kAllChannels = {Channel::lanes, Channel::crosswalks, Channel::ego,
                                                                   Channel::agents};
std::string_view to_string(Channel channel);

// Bird's-eye occupancy grid centered on a pose. Row 0 is the top edge (local +y), column 0 the
// left edge (local -x); the grid's x-axis points along center.yaw.
struct Grid {
  int width_px = 0;
  int height_px = 0;
  double resolution = 0.5;  // [m/px]
  Pose2 center;
  std::array<std::vector<std::uint8_t>, kChannelCount> planes;

  friend bool operator==(const Grid&, const Grid&) = default;

  std::span<const std::uint8_t> plane(Channel c) const { return planes[static_cast<std::size_t>(c)]; }
  std::span<std::uint8_t> plane(Channel c) { return planes[static_cast<std::size_t>(c)]; }
  std::uint8_t at(Channel c, int row, int col) const { return plane(c)[static_cast<std::size_t>(row * width_px + col)]; }

  // World position of the center of pixel (row, col).
  Vec2 pixel_center(int row, int col) const;
  // Fractional (col, row) coordinates of a world point; pixel centers sit at integer + 0.5.
  Vec2 world_to_pixel(const Vec2& world) const;
};

Grid render(const SimState& state, const SemanticMap& map, const Pose2& center, double resolution, int size_px,
            double sim_time);

// Maximal 8-connected sets of 1-pixels, each as ascending row-major indices; components are
// ordered by their smallest index.
std::vector<std::vector<int>> connected_components(std::span<const std::uint8_t> plane, int width, int height);

struct ExtractedAgent {
  Vec2 centroid;  // world [m]
  Obb bbox;       // minimum-area rectangle, long side along bbox.yaw, yaw in (-pi/2, pi/2]
  int pixel_count = 0;
};

inline constexpr int kDefaultMinPixels = 3;

// One entry per component of `channel` with at least min_pixels pixels. The box is the
// minimum-area rectangle of the pixel centers grown by at most half a pixel per side.
std::vector<ExtractedAgent> extract_components(const Grid& grid, Channel channel, int min_pixels = kDefaultMinPixels);

inline std::vector<ExtractedAgent> extract_agents(const Grid& grid, int min_pixels = kDefaultMinPixels) {
  return extract_components(grid, Channel::agents, min_pixels);
}

// Minimum-area enclosing rectangle of a point set via rotating calipers over its convex hull.
Obb min_area_rect(std::span<const Vec2> points);

// Writes <prefix>_<channel>.pgm (binary P5, 0/255) for every channel.
void write_pgm(const Grid& grid, const std::filesystem::path& prefix);

}  // namespace reactsim

#endif  // REACTSIM_RASTER_HPP
