#include "agentsim/metrics/geometry.hpp"

#include "agentsim/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace agentsim
{
std::array<Vec2, 4> OrientedBox::corners() const
{
  const Vec2 f{std::cos(heading) * 0.5 * length, std::sin(heading) * 0.5 * length};
  const Vec2 l{-std::sin(heading) * 0.5 * width, std::cos(heading) * 0.5 * width};
  return {center + f + l, center - f + l, center - f - l, center + f - l};
}

namespace
{
void check_extent(const OrientedBox & b)
{
  if (!(b.length > 0.0) || !(b.width > 0.0)) {
    throw ValidationError("box has a degenerate extent");
  }
}

bool separated_along(const std::array<Vec2, 4> & a, const std::array<Vec2, 4> & b, const Vec2 & axis)
{
  double amin = std::numeric_limits<double>::infinity();
  double amax = -amin;
  double bmin = amin;
  double bmax = -amin;
  for (const auto & p : a) {
    amin = std::min(amin, p.dot(axis));
    amax = std::max(amax, p.dot(axis));
  }
  for (const auto & p : b) {
    bmin = std::min(bmin, p.dot(axis));
    bmax = std::max(bmax, p.dot(axis));
  }
  return amax < bmin || bmax < amin;
}

bool on_segment(const Vec2 & p, const Vec2 & a, const Vec2 & b)
{
  const Vec2 ab = b - a;
  const Vec2 ap = p - a;
  const double scale = std::max({1.0, std::abs(ab.x), std::abs(ab.y)});
  if (std::abs(ab.cross(ap)) > 1e-12 * scale * scale) {
    return false;
  }
  return ap.dot(ab) >= 0.0 && ap.dot(ab) <= ab.dot(ab);
}
}  // namespace

bool boxes_overlap(const OrientedBox & a, const OrientedBox & b)
{
  check_extent(a);
  check_extent(b);
  const auto ca = a.corners();
  const auto cb = b.corners();
  const Vec2 axes[4] = {
    {std::cos(a.heading), std::sin(a.heading)},
    {-std::sin(a.heading), std::cos(a.heading)},
    {std::cos(b.heading), std::sin(b.heading)},
    {-std::sin(b.heading), std::cos(b.heading)}};
  for (const auto & axis : axes) {
    if (separated_along(ca, cb, axis)) {
      return false;
    }
  }
  return true;
}

double point_segment_distance(const Vec2 & p, const Vec2 & a, const Vec2 & b)
{
  const Vec2 ab = b - a;
  const double len2 = ab.dot(ab);
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + ab * t)).norm();
}

double box_distance(const OrientedBox & a, const OrientedBox & b)
{
  if (boxes_overlap(a, b)) {
    return 0.0;
  }
  // Disjoint convex polygons: the closest pair always involves a vertex of one of them.
  const auto ca = a.corners();
  const auto cb = b.corners();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      best = std::min(best, point_segment_distance(ca[i], cb[j], cb[(j + 1) % 4]));
      best = std::min(best, point_segment_distance(cb[j], ca[i], ca[(i + 1) % 4]));
    }
  }
  return best;
}

bool point_in_polygon(const Vec2 & p, std::span<const Vec2> polygon)
{
  require(polygon.size() >= 3, "point_in_polygon: polygon needs at least 3 vertices");
  const std::size_t n = polygon.size();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 & a = polygon[i];
    const Vec2 & b = polygon[j];
    if (on_segment(p, a, b)) {
      return true;
    }
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) {
        inside = !inside;
      }
    }
  }
  return inside;
}

int winding_number(const Vec2 & p, std::span<const Vec2> polygon)
{
  int wn = 0;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 & a = polygon[i];
    const Vec2 & b = polygon[(i + 1) % n];
    const double side = (b - a).cross(p - a);
    if (a.y <= p.y) {
      if (b.y > p.y && side > 0.0) {
        ++wn;
      }
    } else if (b.y <= p.y && side < 0.0) {
      --wn;
    }
  }
  return wn;
}

double distance_to_boundary(const Vec2 & p, std::span<const Vec2> polygon)
{
  require(polygon.size() >= 3, "distance_to_boundary: polygon needs at least 3 vertices");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    best = std::min(best, point_segment_distance(p, polygon[i], polygon[(i + 1) % polygon.size()]));
  }
  return best;
}
}  // namespace agentsim
