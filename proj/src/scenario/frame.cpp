#include "agentsim/scenario/frame.hpp"

#include "agentsim/error.hpp"

namespace agentsim
{
Frame::Frame(const Pose2 & origin)
: origin_{origin.x, origin.y, wrap_angle(origin.heading)},
  c_(std::cos(origin_.heading)),
  s_(std::sin(origin_.heading))
{
}

Vec2 Frame::to_local(const Vec2 & p) const
{
  return rotate_to_local({p.x - origin_.x, p.y - origin_.y});
}

Vec2 Frame::to_global(const Vec2 & p) const
{
  const Vec2 r = rotate_to_global(p);
  return {r.x + origin_.x, r.y + origin_.y};
}

Vec2 Frame::rotate_to_local(const Vec2 & v) const
{
  return {c_ * v.x + s_ * v.y, -s_ * v.x + c_ * v.y};
}

Vec2 Frame::rotate_to_global(const Vec2 & v) const
{
  return {c_ * v.x - s_ * v.y, s_ * v.x + c_ * v.y};
}

AgentState Frame::to_local(const AgentState & s) const
{
  AgentState out = s;
  const Vec2 p = to_local(s.position());
  const Vec2 v = rotate_to_local({s.vx, s.vy});
  out.x = p.x;
  out.y = p.y;
  out.vx = v.x;
  out.vy = v.y;
  out.heading = heading_to_local(s.heading);
  return out;
}

AgentState Frame::to_global(const AgentState & s) const
{
  AgentState out = s;
  const Vec2 p = to_global(s.position());
  const Vec2 v = rotate_to_global({s.vx, s.vy});
  out.x = p.x;
  out.y = p.y;
  out.vx = v.x;
  out.vy = v.y;
  out.heading = heading_to_global(s.heading);
  return out;
}

MapPolyline Frame::to_local(const MapPolyline & pl) const
{
  MapPolyline out;
  out.type = pl.type;
  out.points.reserve(pl.points.size());
  out.directions.reserve(pl.directions.size());
  for (const auto & p : pl.points) {
    out.points.push_back(to_local(p));
  }
  for (const auto & d : pl.directions) {
    out.directions.push_back(rotate_to_local(d));
  }
  return out;
}

LocalScene to_agent_frame(
  const std::vector<AgentState> & states, const std::vector<MapPolyline> & polylines, std::size_t target)
{
  require(target < states.size(), "to_agent_frame: target index out of range");
  require(states[target].valid, "to_agent_frame: target agent is not valid at this time");
  LocalScene scene{Frame(pose_of(states[target])), target, {}, {}};
  scene.agents.reserve(states.size());
  for (const auto & s : states) {
    scene.agents.push_back(scene.frame.to_local(s));
  }
  scene.polylines.reserve(polylines.size());
  for (const auto & pl : polylines) {
    scene.polylines.push_back(scene.frame.to_local(pl));
  }
  return scene;
}

LocalScene to_agent_frame(const Scenario & scenario, std::size_t time_index, std::string_view agent_id)
{
  std::vector<AgentState> states;
  for (const auto & t : scenario.tracks) {
    require(time_index < t.states.size(), "to_agent_frame: time index beyond track length");
    states.push_back(t.states[time_index]);
  }
  return to_agent_frame(states, scenario.polylines, scenario.track_index(agent_id));
}
}  // namespace agentsim
