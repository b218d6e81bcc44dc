#include "reactsim/geometry.hpp"

#include <algorithm>
#include <limits>

#include "reactsim/errors.hpp"

namespace reactsim {

double normalize_angle(double angle) {
  constexpr double pi = std::numbers::pi;
  if (angle > -pi && angle <= pi) return angle;
  double wrapped = std::fmod(angle + pi, 2.0 * pi);
  if (wrapped < 0.0) wrapped += 2.0 * pi;
  const double result = wrapped - pi;
  return result <= -pi ? pi : result;
}

std::vector<Vec2> Obb::corners() const {
  const Vec2 ax = axis_x() * half_extents.x;
  const Vec2 ay = axis_y() * half_extents.y;
  return {center + ax + ay, center - ax + ay, center - ax - ay, center + ax - ay};
}

bool Obb::contains(const Vec2& p) const {
  const Vec2 d = p - center;
  return std::abs(dot(d, axis_x())) <= half_extents.x && std::abs(dot(d, axis_y())) <= half_extents.y;
}

namespace {

double projected_radius(const Obb& box, const Vec2& axis) {
  return box.half_extents.x * std::abs(dot(box.axis_x(), axis)) +
         box.half_extents.y * std::abs(dot(box.axis_y(), axis));
}

}  // namespace

bool obb_overlap(const Obb& a, const Obb& b) {
  const Vec2 d = b.center - a.center;
  for (const Vec2& axis : {a.axis_x(), a.axis_y(), b.axis_x(), b.axis_y()}) {
    if (std::abs(dot(d, axis)) > projected_radius(a, axis) + projected_radius(b, axis)) return false;
  }
  return true;
}

Polyline::Polyline(std::vector<Vec2> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw DomainError("polyline needs at least 2 points");
  cumulative_.reserve(points_.size());
  cumulative_.push_back(0.0);
  for (std::size_t i = 1; i < points_.size(); ++i) {
    cumulative_.push_back(cumulative_.back() + distance(points_[i - 1], points_[i]));
  }
}

std::size_t Polyline::segment_at(double arclength) const {
  // Segment i spans [cumulative_[i], cumulative_[i+1]); the final arclength maps to the last segment.
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), arclength);
  std::size_t seg = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
  return std::min(seg, points_.size() - 2);
}

Vec2 Polyline::point_at(double arclength) const {
  const std::size_t seg = segment_at(arclength);
  const double len = cumulative_[seg + 1] - cumulative_[seg];
  if (len <= 0.0) return points_[seg];
  const double t = std::clamp((arclength - cumulative_[seg]) / len, 0.0, 1.0);
  return points_[seg] + t * (points_[seg + 1] - points_[seg]);
}

double Polyline::tangent_at(double arclength) const {
  std::size_t seg = segment_at(arclength);
  // Zero-length segments have no direction; look forward, then backward.
  for (std::size_t i = seg; i + 1 < points_.size(); ++i) {
    const Vec2 d = points_[i + 1] - points_[i];
    if (d.x != 0.0 || d.y != 0.0) return std::atan2(d.y, d.x);
  }
  for (std::size_t i = seg; i > 0; --i) {
    const Vec2 d = points_[i] - points_[i - 1];
    if (d.x != 0.0 || d.y != 0.0) return std::atan2(d.y, d.x);
  }
  return 0.0;
}

PolylineProjection Polyline::project(const Vec2& p) const {
  PolylineProjection best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    const Vec2 a = points_[i];
    const Vec2 ab = points_[i + 1] - a;
    const double len2 = dot(ab, ab);
    const double t = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    const Vec2 q = a + t * ab;
    const double dist = distance(p, q);
    if (dist < best.distance) {
      best.distance = dist;
      best.segment = i;
      best.point = q;
      best.arclength = cumulative_[i] + t * std::sqrt(len2);
      const double side = len2 > 0.0 ? cross(ab, p - q) : 0.0;
      best.lateral = side < 0.0 ? -dist : dist;
    }
  }
  return best;
}

bool point_in_polygon(std::span<const Vec2> polygon, const Vec2& p) {
  if (polygon.size() < 3) return false;
  bool inside = false;
  for (std::size_t i = 0, j = polygon.size() - 1; i < polygon.size(); j = i++) {
    const Vec2& a = polygon[i];
    const Vec2& b = polygon[j];
    if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) inside = !inside;
  }
  return inside;
}

}  // namespace reactsim
