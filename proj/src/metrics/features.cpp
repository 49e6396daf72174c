#include "agentsim/metrics/features.hpp"

#include "agentsim/error.hpp"
#include "agentsim/metrics/geometry.hpp"

#include <cmath>
#include <limits>

namespace agentsim
{
KinematicFeatures kinematic_features(std::span<const AgentState> traj, double dt)
{
  if (traj.size() < 3) {
    throw ValidationError("kinematic_features: need at least 3 states");
  }
  KinematicFeatures f;
  for (std::size_t t = 0; t + 1 < traj.size(); ++t) {
    f.linear_speed.push_back((traj[t + 1].position() - traj[t].position()).norm() / dt);
    f.angular_speed.push_back(wrap_angle(traj[t + 1].heading - traj[t].heading) / dt);
  }
  for (std::size_t t = 0; t + 1 < f.linear_speed.size(); ++t) {
    f.linear_accel.push_back((f.linear_speed[t + 1] - f.linear_speed[t]) / dt);
    f.angular_accel.push_back((f.angular_speed[t + 1] - f.angular_speed[t]) / dt);
  }
  return f;
}

namespace
{
Vec2 fd_velocity(const std::vector<AgentState> & traj, std::size_t t, double dt)
{
  if (traj.size() < 2) {
    return {};
  }
  const std::size_t a = t == 0 ? 0 : t - 1;
  const std::size_t b = t == 0 ? 1 : t;
  return (traj[b].position() - traj[a].position()) * (1.0 / dt);
}

OrientedBox moved(const AgentState & s, const Vec2 & v, double tau)
{
  return {s.position() + v * tau, s.heading, s.length, s.width};
}
}  // namespace

InteractiveFeatures interactive_features(const std::vector<std::vector<AgentState>> & agents, double dt)
{
  const std::size_t n = agents.size();
  require(n >= 1, "interactive_features: no agents");
  const std::size_t steps = agents[0].size();
  for (const auto & a : agents) {
    require(a.size() == steps, "interactive_features: trajectories differ in length");
  }
  const double inf = std::numeric_limits<double>::infinity();
  InteractiveFeatures f;
  f.dist_to_obj.assign(n, std::vector<double>(steps, inf));
  f.collision.assign(n, std::vector<bool>(steps, false));
  f.ttc.assign(n, std::vector<double>(steps, inf));
  const auto sweep_steps = static_cast<int>(std::lround(kTtcHorizon / dt));
  for (std::size_t t = 0; t < steps; ++t) {
    std::vector<Vec2> vel(n);
    for (std::size_t i = 0; i < n; ++i) {
      vel[i] = fd_velocity(agents[i], t, dt);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const OrientedBox bi = OrientedBox::of(agents[i][t]);
      for (std::size_t j = i + 1; j < n; ++j) {
        const OrientedBox bj = OrientedBox::of(agents[j][t]);
        const double d = box_distance(bi, bj);
        f.dist_to_obj[i][t] = std::min(f.dist_to_obj[i][t], d);
        f.dist_to_obj[j][t] = std::min(f.dist_to_obj[j][t], d);
        if (d == 0.0) {
          f.collision[i][t] = true;
          f.collision[j][t] = true;
        }
        for (int k = 1; k <= sweep_steps; ++k) {
          const double tau = k * dt;
          if (tau >= f.ttc[i][t] && tau >= f.ttc[j][t]) {
            break;
          }
          if (boxes_overlap(moved(agents[i][t], vel[i], tau), moved(agents[j][t], vel[j], tau))) {
            f.ttc[i][t] = std::min(f.ttc[i][t], tau);
            f.ttc[j][t] = std::min(f.ttc[j][t], tau);
            break;
          }
        }
      }
    }
  }
  return f;
}

MapFeatures map_features(const std::vector<std::vector<AgentState>> & agents, std::span<const Vec2> drivable_area)
{
  if (drivable_area.size() < 3) {
    throw ValidationError("map_features: missing drivable_area polygon");
  }
  MapFeatures f;
  for (const auto & traj : agents) {
    std::vector<double> d;
    std::vector<bool> off;
    for (const auto & s : traj) {
      d.push_back(distance_to_boundary(s.position(), drivable_area));
      off.push_back(!point_in_polygon(s.position(), drivable_area));
    }
    f.dist_to_road_edge.push_back(std::move(d));
    f.offroad.push_back(std::move(off));
  }
  return f;
}
}  // namespace agentsim
