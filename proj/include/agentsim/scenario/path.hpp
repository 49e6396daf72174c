#ifndef AGENTSIM__SCENARIO__PATH_HPP_
#define AGENTSIM__SCENARIO__PATH_HPP_

#include "agentsim/scenario/frame.hpp"

#include <vector>

namespace agentsim
{
/// Constant-curvature piece: a line when curvature == 0, otherwise a circular arc.
struct PathSegment
{
  Pose2 start;
  double length = 0.0;
  double curvature = 0.0;  //!< 1/m, positive turns left.

  Pose2 pose_at(double s) const;
  Pose2 end() const { return pose_at(length); }
};

/// Arc-length parameterized chain of line / arc segments.
class Path
{
public:
  Path() = default;
  static Path line(const Pose2 & start, double length);
  static Path arc(const Pose2 & start, double length, double curvature);

  /// Appends a segment continuing from the current end pose.
  Path & then(double length, double curvature = 0.0);

  double length() const noexcept { return length_; }
  /// Pose at arc length s, clamped to [0, length].
  Pose2 pose_at(double s) const;
  Pose2 end() const { return segments_.back().end(); }

  /// Parallel path at lateral offset d (left positive); requires 1 - curvature * d > 0 everywhere.
  Path offset(double d) const;
  Path reversed() const;
  /// Rigid motion of the whole path.
  Path transformed(const Frame & frame) const;
  /// Points at s = 0, spacing, 2 spacing, ..., plus the end point.
  std::vector<Vec2> sample(double spacing) const;

  const std::vector<PathSegment> & segments() const noexcept { return segments_; }

private:
  std::vector<PathSegment> segments_;
  double length_ = 0.0;
};

/// Piecewise-linear speed over time, constant after the last knot.
class SpeedProfile
{
public:
  static SpeedProfile constant(double v);
  /// Knots (t, v) with strictly increasing t starting at 0.
  explicit SpeedProfile(std::vector<std::pair<double, double>> knots);

  double speed(double t) const;
  /// Distance travelled over [0, t]; exact for the piecewise-linear speed.
  double distance(double t) const;

private:
  std::vector<std::pair<double, double>> knots_;
};
}  // namespace agentsim

#endif  // AGENTSIM__SCENARIO__PATH_HPP_
