#ifndef AGENTSIM__METRICS__GEOMETRY_HPP_
#define AGENTSIM__METRICS__GEOMETRY_HPP_

#include "agentsim/scenario/types.hpp"

#include <array>
#include <span>

namespace agentsim
{
struct OrientedBox
{
  Vec2 center;
  double heading = 0.0;
  double length = 0.0;  //!< Along heading.
  double width = 0.0;

  static OrientedBox of(const AgentState & s) { return {s.position(), s.heading, s.length, s.width}; }
  /// Counter-clockwise corners starting at front-left.
  std::array<Vec2, 4> corners() const;
};

/// Separating-axis test; touching boxes count as overlapping.
bool boxes_overlap(const OrientedBox & a, const OrientedBox & b);

/// Exact Euclidean distance between two rectangles, 0 when they overlap.
double box_distance(const OrientedBox & a, const OrientedBox & b);

double point_segment_distance(const Vec2 & p, const Vec2 & a, const Vec2 & b);

/// Even-odd rule; points on the boundary are inside.
bool point_in_polygon(const Vec2 & p, std::span<const Vec2> polygon);

/// Winding number of the polygon around p (0 when p is outside).
int winding_number(const Vec2 & p, std::span<const Vec2> polygon);

/// Unsigned distance from p to the polygon boundary.
double distance_to_boundary(const Vec2 & p, std::span<const Vec2> polygon);
}  // namespace agentsim

#endif  // AGENTSIM__METRICS__GEOMETRY_HPP_
