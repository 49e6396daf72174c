#ifndef AGENTSIM__SCENARIO__FRAME_HPP_
#define AGENTSIM__SCENARIO__FRAME_HPP_

#include "agentsim/scenario/types.hpp"

#include <vector>

namespace agentsim
{
struct Pose2
{
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
};

inline Pose2 pose_of(const AgentState & s) { return {s.x, s.y, s.heading}; }

/// Rigid 2-D frame placed at a pose; local +x points along the pose heading.
class Frame
{
public:
  explicit Frame(const Pose2 & origin = {});

  const Pose2 & origin() const noexcept { return origin_; }

  Vec2 to_local(const Vec2 & p) const;
  Vec2 to_global(const Vec2 & p) const;
  Vec2 rotate_to_local(const Vec2 & v) const;
  Vec2 rotate_to_global(const Vec2 & v) const;
  double heading_to_local(double heading) const { return wrap_angle(heading - origin_.heading); }
  double heading_to_global(double heading) const { return wrap_angle(heading + origin_.heading); }

  AgentState to_local(const AgentState & s) const;
  AgentState to_global(const AgentState & s) const;
  MapPolyline to_local(const MapPolyline & pl) const;

private:
  Pose2 origin_;
  double c_;
  double s_;
};

/// Agent states and map expressed in the frame of one target agent.
struct LocalScene
{
  Frame frame;
  std::size_t target_index = 0;
  std::vector<AgentState> agents;
  std::vector<MapPolyline> polylines;
};

/// Transforms states (one per agent, at one time) and polylines into the frame of agents[target].
LocalScene to_agent_frame(
  const std::vector<AgentState> & states, const std::vector<MapPolyline> & polylines, std::size_t target);

/// Same, taking the states of every track at time index t of the scenario.
LocalScene to_agent_frame(const Scenario & scenario, std::size_t time_index, std::string_view agent_id);
}  // namespace agentsim

#endif  // AGENTSIM__SCENARIO__FRAME_HPP_
