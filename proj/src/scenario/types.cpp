#include "agentsim/scenario/types.hpp"

#include "agentsim/error.hpp"

#include <algorithm>
#include <numbers>
#include <set>

namespace agentsim
{
std::string_view to_string(AgentCategory category)
{
  switch (category) {
    case AgentCategory::vehicle:
      return "vehicle";
    case AgentCategory::pedestrian:
      return "pedestrian";
    case AgentCategory::cyclist:
      return "cyclist";
  }
  return "vehicle";
}

std::string_view to_string(PolylineType type)
{
  switch (type) {
    case PolylineType::lane_center:
      return "lane_center";
    case PolylineType::road_edge:
      return "road_edge";
    case PolylineType::crosswalk:
      return "crosswalk";
    case PolylineType::stop_line:
      return "stop_line";
  }
  return "lane_center";
}

AgentCategory parse_category(std::string_view text)
{
  if (text == "vehicle") {
    return AgentCategory::vehicle;
  }
  if (text == "pedestrian") {
    return AgentCategory::pedestrian;
  }
  if (text == "cyclist") {
    return AgentCategory::cyclist;
  }
  throw ValidationError("unknown agent category: " + std::string(text));
}

PolylineType parse_polyline_type(std::string_view text)
{
  for (int i = 0; i < static_cast<int>(kNumPolylineTypes); ++i) {
    if (to_string(static_cast<PolylineType>(i)) == text) {
      return static_cast<PolylineType>(i);
    }
  }
  throw ValidationError("unknown polyline type: " + std::string(text));
}

double wrap_angle(double angle)
{
  constexpr double pi = std::numbers::pi;
  double a = std::remainder(angle, 2.0 * pi);  // [-pi, pi]
  if (a <= -pi) {
    a += 2.0 * pi;
  }
  return a;
}

AgentState make_state(
  double x, double y, double z, double heading, double vx, double vy, double length, double width,
  AgentCategory category, bool valid)
{
  return AgentState{x, y, z, wrap_angle(heading), vx, vy, length, width, category, valid};
}

MapPolyline MapPolyline::make(std::vector<Vec2> points, PolylineType type)
{
  require(points.size() >= 2, "polyline needs at least 2 points");
  MapPolyline pl;
  pl.type = type;
  pl.directions.resize(points.size());
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const Vec2 d = points[i + 1] - points[i];
    const double n = d.norm();
    require(n > 0.0, "polyline has a zero-length segment");
    pl.directions[i] = d * (1.0 / n);
  }
  pl.directions.back() = pl.directions[points.size() - 2];
  pl.points = std::move(points);
  return pl;
}

std::size_t Scenario::track_index(std::string_view agent_id) const
{
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (tracks[i].agent_id == agent_id) {
      return i;
    }
  }
  throw ValidationError("unknown agent id: " + std::string(agent_id));
}

namespace
{
int orientation(const Vec2 & a, const Vec2 & b, const Vec2 & c)
{
  const double v = (b - a).cross(c - a);
  return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0);
}

bool on_segment(const Vec2 & a, const Vec2 & b, const Vec2 & p)
{
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_intersect(const Vec2 & p1, const Vec2 & p2, const Vec2 & q1, const Vec2 & q2)
{
  // Box rejection first: orientation signs are noise for nearly collinear, disjoint segments.
  if (std::max(p1.x, p2.x) < std::min(q1.x, q2.x) || std::max(q1.x, q2.x) < std::min(p1.x, p2.x) ||
      std::max(p1.y, p2.y) < std::min(q1.y, q2.y) || std::max(q1.y, q2.y) < std::min(p1.y, p2.y)) {
    return false;
  }
  const int o1 = orientation(p1, p2, q1), o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1), o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) {
    return true;
  }
  return (o1 == 0 && on_segment(p1, p2, q1)) || (o2 == 0 && on_segment(p1, p2, q2)) ||
         (o3 == 0 && on_segment(q1, q2, p1)) || (o4 == 0 && on_segment(q1, q2, p2));
}
}  // namespace

bool polygon_is_simple(std::span<const Vec2> polygon)
{
  const std::size_t n = polygon.size();
  if (n < 3) {
    return false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (polygon[i] == polygon[(i + 1) % n]) {
      return false;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 & a1 = polygon[i];
    const Vec2 & a2 = polygon[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      const Vec2 & b1 = polygon[j];
      const Vec2 & b2 = polygon[(j + 1) % n];
      if (adjacent) {
        // Adjacent edges may only meet at the shared vertex: reject collinear folds.
        const Vec2 & shared = (j == i + 1) ? a2 : a1;
        const Vec2 & other_a = (j == i + 1) ? a1 : a2;
        const Vec2 & other_b = (j == i + 1) ? b2 : b1;
        if (orientation(other_a, shared, other_b) == 0 && (other_a - shared).dot(other_b - shared) > 0.0) {
          return false;
        }
        continue;
      }
      if (segments_intersect(a1, a2, b1, b2)) {
        return false;
      }
    }
  }
  return true;
}

void validate_track(const AgentTrack & track)
{
  require(!track.agent_id.empty(), "track has an empty agent_id");
  require(track.states.size() >= 2, "track " + track.agent_id + " has fewer than 2 states");
  require(track.history_len >= 2 && track.history_len <= track.states.size(),
    "track " + track.agent_id + " has history_len outside [2, length]");
  const auto & first = track.states.front();
  for (const auto & s : track.states) {
    require(std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.z) && std::isfinite(s.heading) &&
              std::isfinite(s.vx) && std::isfinite(s.vy),
      "track " + track.agent_id + " has a non-finite state");
    require(s.heading > -std::numbers::pi && s.heading <= std::numbers::pi,
      "track " + track.agent_id + " has a heading outside (-pi, pi]");
    require(s.length > 0.0 && s.width > 0.0, "track " + track.agent_id + " has a non-positive extent");
    require(s.length == first.length && s.width == first.width, "track " + track.agent_id + " changes extent");
    require(s.category == first.category, "track " + track.agent_id + " changes category");
  }
}

void validate_scenario(const Scenario & scenario, std::size_t agent_cap)
{
  require(!scenario.scenario_id.empty(), "scenario_id is empty");
  require(!scenario.polylines.empty(), "scenario has no polylines");
  for (const auto & pl : scenario.polylines) {
    require(pl.points.size() >= 2 && pl.directions.size() == pl.points.size(), "polyline has fewer than 2 points");
  }
  require(polygon_is_simple(scenario.drivable_area), "drivable_area is not a simple polygon");
  require(scenario.tracks.size() >= 2, "scenario needs the ADV and at least one other agent");
  require(scenario.tracks.size() <= agent_cap,
    "scenario has " + std::to_string(scenario.tracks.size()) + " agents, cap is " + std::to_string(agent_cap));
  std::set<std::string> ids;
  for (const auto & t : scenario.tracks) {
    validate_track(t);
    require(ids.insert(t.agent_id).second, "duplicate agent id " + t.agent_id);
  }
  require(ids.count(scenario.adv_id) == 1, "adv_id '" + scenario.adv_id + "' is not among the tracks");
}

void validate_rollout_set(const RolloutSet & set, std::size_t expected_rollouts, std::size_t expected_steps)
{
  require(set.rollouts.size() == expected_rollouts,
    "rollout set has " + std::to_string(set.rollouts.size()) + " rollouts, expected " +
      std::to_string(expected_rollouts));
  for (const auto & r : set.rollouts) {
    require(r.agents.size() == set.agent_ids.size(), "rollout agent count mismatch");
    for (const auto & traj : r.agents) {
      require(traj.size() == expected_steps, "rollout trajectory has the wrong step count");
      for (const auto & s : traj) {
        require(std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.heading),
          "rollout contains a non-finite state");
        require(s.heading > -std::numbers::pi && s.heading <= std::numbers::pi, "rollout heading outside (-pi, pi]");
        require(s.length > 0.0 && s.width > 0.0, "rollout state with non-positive extent");
      }
    }
  }
}

HistoryFutureSplit split_history_future(const AgentTrack & track, std::size_t split_index)
{
  require(split_index >= 2 && split_index + 1 <= track.states.size(),
    "split_index " + std::to_string(split_index) + " outside [2, " + std::to_string(track.states.size() - 1) + "]");
  HistoryFutureSplit out;
  out.history.agent_id = track.agent_id;
  out.history.start_step = track.start_step;
  out.history.states.assign(track.states.begin(), track.states.begin() + static_cast<std::ptrdiff_t>(split_index));
  out.history.history_len = split_index;
  out.future.agent_id = track.agent_id;
  out.future.start_step = track.start_step + static_cast<std::int64_t>(split_index);
  out.future.states.assign(track.states.begin() + static_cast<std::ptrdiff_t>(split_index), track.states.end());
  out.future.history_len = 0;
  return out;
}
}  // namespace agentsim
