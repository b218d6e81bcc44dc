#include "reactsim/raster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "reactsim/errors.hpp"

namespace reactsim {

std::string_view to_string(Channel channel) {
  switch (channel) {
    case Channel::lanes: return "lanes";
    case Channel::crosswalks: return "crosswalks";
    case Channel::ego: return "ego";
    case Channel::agents: return "agents";
  }
  return "unknown";
}

Vec2 Grid::pixel_center(int row, int col) const {
  const Vec2 local{(col + 0.5 - width_px / 2.0) * resolution, (height_px / 2.0 - (row + 0.5)) * resolution};
  return center.to_world(local);
}

Vec2 Grid::world_to_pixel(const Vec2& world) const {
  const Vec2 local = center.to_local(world);
  return {local.x / resolution + width_px / 2.0, height_px / 2.0 - local.y / resolution};
}

namespace {

struct PixelWindow {
  int row0 = 0, row1 = -1, col0 = 0, col1 = -1;  // inclusive
};

// Pixels whose centers may fall inside the world-space bounding box of `points` grown by `margin`.
PixelWindow window_for(const Grid& grid, std::span<const Vec2> points, double margin) {
  double cmin = std::numeric_limits<double>::infinity(), cmax = -cmin, rmin = cmin, rmax = -cmin;
  const double m = margin / grid.resolution;
  for (const Vec2& p : points) {
    const Vec2 px = grid.world_to_pixel(p);
    cmin = std::min(cmin, px.x);
    cmax = std::max(cmax, px.x);
    rmin = std::min(rmin, px.y);
    rmax = std::max(rmax, px.y);
  }
  PixelWindow w;
  w.col0 = std::max(0, static_cast<int>(std::floor(cmin - m - 1.0)));
  w.col1 = std::min(grid.width_px - 1, static_cast<int>(std::ceil(cmax + m + 1.0)));
  w.row0 = std::max(0, static_cast<int>(std::floor(rmin - m - 1.0)));
  w.row1 = std::min(grid.height_px - 1, static_cast<int>(std::ceil(rmax + m + 1.0)));
  return w;
}

template <typename Inside>
void fill(Grid& grid, Channel channel, const PixelWindow& w, Inside&& inside) {
  auto plane = grid.plane(channel);
  for (int r = w.row0; r <= w.row1; ++r) {
    for (int c = w.col0; c <= w.col1; ++c) {
      if (inside(grid.pixel_center(r, c))) plane[static_cast<std::size_t>(r * grid.width_px + c)] = 1;
    }
  }
}

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  const double t = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
  return distance(p, a + t * ab);
}

void fill_box(Grid& grid, Channel channel, const Obb& box) {
  const std::vector<Vec2> corners = box.corners();
  fill(grid, channel, window_for(grid, corners, 0.0), [&](const Vec2& p) { return box.contains(p); });
}

}  // namespace

Grid render(const SimState& state, const SemanticMap& map, const Pose2& center, double resolution, int size_px,
            double sim_time) {
  if (size_px <= 0) throw DomainError("render: size_px must be positive");
  if (!(resolution > 0.0)) throw DomainError("render: resolution must be positive");
  Grid grid;
  grid.width_px = size_px;
  grid.height_px = size_px;
  grid.resolution = resolution;
  grid.center = center;
  for (auto& p : grid.planes) p.assign(static_cast<std::size_t>(size_px) * static_cast<std::size_t>(size_px), 0);

  for (const Lane& lane : map.lanes()) {
    if (!map.lane_open(lane, sim_time)) continue;
    const auto& pts = lane.centerline.points();
    const double half_width = lane.width / 2.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const std::array<Vec2, 2> seg = {pts[i], pts[i + 1]};
      fill(grid, Channel::lanes, window_for(grid, seg, half_width),
           [&](const Vec2& p) { return segment_distance(p, seg[0], seg[1]) <= half_width; });
    }
  }
  for (const Crosswalk& cw : map.crosswalks()) {
    fill(grid, Channel::crosswalks, window_for(grid, cw.polygon, 0.0),
         [&](const Vec2& p) { return point_in_polygon(cw.polygon, p); });
  }
  for (const AgentState& a : state.agents) {
    if (!a.active) continue;
    fill_box(grid, a.id == state.ego_id ? Channel::ego : Channel::agents, a.footprint());
  }
  return grid;
}

std::vector<std::vector<int>> connected_components(std::span<const std::uint8_t> plane, int width, int height) {
  if (width < 0 || height < 0 || plane.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw DomainError("connected_components: plane size does not match dimensions");
  }
  std::vector<std::uint8_t> visited(plane.size(), 0);
  std::vector<std::vector<int>> components;
  std::vector<int> stack;
  for (int start = 0; start < width * height; ++start) {
    if (plane[static_cast<std::size_t>(start)] == 0 || visited[static_cast<std::size_t>(start)] != 0) continue;
    std::vector<int> component;
    visited[static_cast<std::size_t>(start)] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      const int idx = stack.back();
      stack.pop_back();
      component.push_back(idx);
      const int r = idx / width;
      const int c = idx % width;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr;
          const int cc = c + dc;
          if (rr < 0 || rr >= height || cc < 0 || cc >= width) continue;
          const auto n = static_cast<std::size_t>(rr * width + cc);
          if (plane[n] != 0 && visited[n] == 0) {
            visited[n] = 1;
            stack.push_back(static_cast<int>(n));
          }
        }
      }
    }
    std::sort(component.begin(), component.end());
    components.push_back(std::move(component));
  }
  return components;
}

namespace {

std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Vec2& p : pts) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    const Vec2& p = pts[i];
    while (k >= lower && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

Obb bounding_rect_along(std::span<const Vec2> pts, double yaw) {
  const Vec2 ux = unit_from_yaw(yaw);
  const Vec2 uy{-ux.y, ux.x};
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const Vec2& p : pts) {
    const double px = dot(p, ux);
    const double py = dot(p, uy);
    x0 = std::min(x0, px);
    x1 = std::max(x1, px);
    y0 = std::min(y0, py);
    y1 = std::max(y1, py);
  }
  const double cx = (x0 + x1) / 2.0;
  const double cy = (y0 + y1) / 2.0;
  return Obb{cx * ux + cy * uy, {(x1 - x0) / 2.0, (y1 - y0) / 2.0}, yaw};
}

// Long side along x, yaw folded into (-pi/2, pi/2].
Obb canonical(Obb box) {
  if (box.half_extents.y > box.half_extents.x) {
    std::swap(box.half_extents.x, box.half_extents.y);
    box.yaw += std::numbers::pi / 2.0;
  }
  double yaw = normalize_angle(box.yaw);
  if (yaw > std::numbers::pi / 2.0) yaw -= std::numbers::pi;
  if (yaw <= -std::numbers::pi / 2.0) yaw += std::numbers::pi;
  box.yaw = yaw;
  return box;
}

}  // namespace

Obb min_area_rect(std::span<const Vec2> points) {
  if (points.empty()) throw DomainError("min_area_rect: empty point set");
  const std::vector<Vec2> hull = convex_hull({points.begin(), points.end()});
  if (hull.size() == 1) return Obb{hull[0], {0.0, 0.0}, 0.0};
  if (hull.size() == 2) {
    const Vec2 d = hull[1] - hull[0];
    return canonical(bounding_rect_along(hull, std::atan2(d.y, d.x)));
  }
  // The optimal rectangle has one side collinear with a hull edge.
  Obb best;
  double best_area = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2 d = hull[(i + 1) % hull.size()] - hull[i];
    const Obb candidate = bounding_rect_along(hull, std::atan2(d.y, d.x));
    const double area = candidate.half_extents.x * candidate.half_extents.y;
    if (area < best_area - 1e-12) {
      best_area = area;
      best = candidate;
    }
  }
  return canonical(best);
}

namespace {

// Per-side growth of the pixel-center rectangle: half a pixel for axis-aligned blobs, less when
// the blob is oblique and its outermost centers already sit near the true edge. Chosen so the
// grown area matches the component's pixel area, capped at half a pixel.
double growth_margin(const Obb& centers_rect, std::size_t pixels, double resolution) {
  const double a = 2.0 * centers_rect.half_extents.x;
  const double b = 2.0 * centers_rect.half_extents.y;
  const double area = static_cast<double>(pixels) * resolution * resolution;
  const double t = (-(a + b) + std::sqrt((a + b) * (a + b) - 4.0 * (a * b - area))) / 2.0;
  return std::clamp(t, 0.0, resolution) / 2.0;
}

}  // namespace

std::vector<ExtractedAgent> extract_components(const Grid& grid, Channel channel, int min_pixels) {
  std::vector<ExtractedAgent> out;
  for (const std::vector<int>& comp : connected_components(grid.plane(channel), grid.width_px, grid.height_px)) {
    if (static_cast<int>(comp.size()) < min_pixels) continue;
    std::vector<Vec2> centers;
    centers.reserve(comp.size());
    Vec2 sum;
    for (int idx : comp) {
      const Vec2 p = grid.pixel_center(idx / grid.width_px, idx % grid.width_px);
      centers.push_back(p);
      sum += p;
    }
    ExtractedAgent agent;
    agent.centroid = (1.0 / static_cast<double>(comp.size())) * sum;
    agent.bbox = min_area_rect(centers);
    agent.bbox.half_extents += Vec2{1.0, 1.0} * growth_margin(agent.bbox, comp.size(), grid.resolution);
    agent.pixel_count = static_cast<int>(comp.size());
    out.push_back(agent);
  }
  return out;
}

void write_pgm(const Grid& grid, const std::filesystem::path& prefix) {
  for (Channel c : kAllChannels) {
    std::filesystem::path path = prefix;
    path += "_" + std::string(to_string(c)) + ".pgm";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "P5\n" << grid.width_px << ' ' << grid.height_px << "\n255\n";
    for (std::uint8_t v : grid.plane(c)) out.put(static_cast<char>(v != 0 ? 255 : 0));
    if (!out) throw IoError("failed writing " + path.string());
  }
}

}  // namespace reactsim
