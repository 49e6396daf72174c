#include "agentsim/scenario/path.hpp"

#include "agentsim/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace agentsim
{
Pose2 PathSegment::pose_at(double s) const
{
  const double h0 = start.heading;
  if (curvature == 0.0) {
    return {start.x + s * std::cos(h0), start.y + s * std::sin(h0), wrap_angle(h0)};
  }
  const double h = h0 + curvature * s;
  return {
    start.x + (std::sin(h) - std::sin(h0)) / curvature, start.y - (std::cos(h) - std::cos(h0)) / curvature,
    wrap_angle(h)};
}

Path Path::line(const Pose2 & start, double length)
{
  require(length > 0.0, "Path::line: length must be positive");
  Path p;
  p.segments_.push_back({start, length, 0.0});
  p.length_ = length;
  return p;
}

Path Path::arc(const Pose2 & start, double length, double curvature)
{
  require(length > 0.0, "Path::arc: length must be positive");
  Path p;
  p.segments_.push_back({start, length, curvature});
  p.length_ = length;
  return p;
}

Path & Path::then(double length, double curvature)
{
  require(!segments_.empty(), "Path::then on an empty path");
  require(length > 0.0, "Path::then: length must be positive");
  segments_.push_back({segments_.back().end(), length, curvature});
  length_ += length;
  return *this;
}

Pose2 Path::pose_at(double s) const
{
  s = std::clamp(s, 0.0, length_);
  for (const auto & seg : segments_) {
    if (s <= seg.length) {
      return seg.pose_at(s);
    }
    s -= seg.length;
  }
  return segments_.back().end();
}

Path Path::offset(double d) const
{
  Path out;
  for (const auto & seg : segments_) {
    const double factor = 1.0 - seg.curvature * d;
    require(factor > 0.0, "Path::offset: offset exceeds the turning radius");
    const Pose2 s = seg.start;
    PathSegment o{{s.x - d * std::sin(s.heading), s.y + d * std::cos(s.heading), s.heading}, seg.length * factor,
      seg.curvature / factor};
    out.segments_.push_back(o);
    out.length_ += o.length;
  }
  return out;
}

Path Path::reversed() const
{
  Path out;
  for (auto it = segments_.rbegin(); it != segments_.rend(); ++it) {
    const Pose2 e = it->end();
    out.segments_.push_back({{e.x, e.y, wrap_angle(e.heading + std::numbers::pi)}, it->length, -it->curvature});
    out.length_ += it->length;
  }
  return out;
}

Path Path::transformed(const Frame & frame) const
{
  Path out = *this;
  for (auto & seg : out.segments_) {
    const Vec2 p = frame.to_global(Vec2{seg.start.x, seg.start.y});
    seg.start = {p.x, p.y, frame.heading_to_global(seg.start.heading)};
  }
  return out;
}

std::vector<Vec2> Path::sample(double spacing) const
{
  require(spacing > 0.0, "Path::sample: spacing must be positive");
  std::vector<Vec2> pts;
  const auto n = static_cast<std::size_t>(std::floor(length_ / spacing));
  for (std::size_t i = 0; i <= n; ++i) {
    const Pose2 p = pose_at(static_cast<double>(i) * spacing);
    pts.push_back({p.x, p.y});
  }
  if (length_ - static_cast<double>(n) * spacing > 1e-6) {
    const Pose2 p = pose_at(length_);
    pts.push_back({p.x, p.y});
  }
  return pts;
}

SpeedProfile SpeedProfile::constant(double v)
{
  return SpeedProfile({{0.0, v}});
}

SpeedProfile::SpeedProfile(std::vector<std::pair<double, double>> knots) : knots_(std::move(knots))
{
  require(!knots_.empty() && knots_.front().first == 0.0, "SpeedProfile: first knot must be at t = 0");
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    require(knots_[i].second >= 0.0, "SpeedProfile: negative speed");
    if (i > 0) {
      require(knots_[i].first > knots_[i - 1].first, "SpeedProfile: knot times must increase");
    }
  }
}

double SpeedProfile::speed(double t) const
{
  if (t <= 0.0) {
    return knots_.front().second;
  }
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
    const auto [t0, v0] = knots_[i];
    const auto [t1, v1] = knots_[i + 1];
    if (t <= t1) {
      return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
    }
  }
  return knots_.back().second;
}

double SpeedProfile::distance(double t) const
{
  double d = 0.0;
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
    const auto [t0, v0] = knots_[i];
    const auto t1 = knots_[i + 1].first;
    if (t <= t0) {
      return d;
    }
    const double te = std::min(t, t1);
    d += 0.5 * (v0 + speed(te)) * (te - t0);
    if (t <= t1) {
      return d;
    }
  }
  const auto [tl, vl] = knots_.back();
  if (t > tl) {
    d += vl * (t - tl);
  }
  return d;
}
}  // namespace agentsim
