#ifndef REACTSIM_GEOMETRY_HPP
#define REACTSIM_GEOMETRY_HPP

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace reactsim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;

  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  friend Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
  friend Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
  friend Vec2 operator*(double s, const Vec2& v) { return {s * v.x, s * v.y}; }
  friend Vec2 operator*(const Vec2& v, double s) { return {s * v.x, s * v.y}; }
  Vec2 operator-() const { return {-x, -y}; }
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& v) { return std::hypot(v.x, v.y); }
inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }
inline Vec2 unit_from_yaw(double yaw) { return {std::cos(yaw), std::sin(yaw)}; }
inline Vec2 rotate(const Vec2& v, double yaw) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// Maps any angle into (-pi, pi]. Values already in range are returned unchanged.
double normalize_angle(double angle);

// World-frame pose: meters east/north, yaw radians CCW from +x.
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;

  friend bool operator==(const Pose2&, const Pose2&) = default;

  Vec2 position() const { return {x, y}; }
  // Expresses a world point in this pose's frame.
  Vec2 to_local(const Vec2& world) const { return rotate(world - position(), -yaw); }
  Vec2 to_world(const Vec2& local) const { return position() + rotate(local, yaw); }
};

// Oriented rectangle.
struct Obb {
  Vec2 center;
  Vec2 half_extents;  // along the box's own x (yaw direction) and y
  double yaw = 0.0;

  Vec2 axis_x() const { return unit_from_yaw(yaw); }
  Vec2 axis_y() const { return unit_from_yaw(yaw + std::numbers::pi / 2.0); }
  // Counter-clockwise, starting at the front-left corner.
  std::vector<Vec2> corners() const;
  bool contains(const Vec2& p) const;
};

// Separating-axis test over the four box axes. Touching boxes count as overlapping.
bool obb_overlap(const Obb& a, const Obb& b);

struct PolylineProjection {
  double arclength = 0.0;
  // Signed distance, positive to the left of the travel direction.
  double lateral = 0.0;
  double distance = 0.0;
  std::size_t segment = 0;
  Vec2 point;
};

// Piecewise-linear curve with cached cumulative arclength.
class Polyline {
 public:
  Polyline() = default;
  explicit Polyline(std::vector<Vec2> points);

  const std::vector<Vec2>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

  // Arclength must lie in [0, length()]; values slightly outside are clamped by the caller.
  Vec2 point_at(double arclength) const;
  double tangent_at(double arclength) const;
  PolylineProjection project(const Vec2& p) const;

 private:
  std::size_t segment_at(double arclength) const;

  std::vector<Vec2> points_;
  std::vector<double> cumulative_;
};

// Even-odd rule.
bool point_in_polygon(std::span<const Vec2> polygon, const Vec2& p);

}  // namespace reactsim

#endif  // REACTSIM_GEOMETRY_HPP
