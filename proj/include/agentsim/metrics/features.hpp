#ifndef AGENTSIM__METRICS__FEATURES_HPP_
#define AGENTSIM__METRICS__FEATURES_HPP_

#include "agentsim/scenario/types.hpp"

#include <span>
#include <vector>

namespace agentsim
{
inline constexpr double kTtcHorizon = 5.0;  //!< [s]

struct KinematicFeatures
{
  std::vector<double> linear_speed;   //!< T - 1
  std::vector<double> linear_accel;   //!< T - 2
  std::vector<double> angular_speed;  //!< T - 1
  std::vector<double> angular_accel;  //!< T - 2
};

/// Finite differences of positions and wrapped headings; needs >= 3 states.
KinematicFeatures kinematic_features(std::span<const AgentState> traj, double dt = kDt);

/// Per [agent][step] values; every agent trajectory has the same length.
struct InteractiveFeatures
{
  std::vector<std::vector<double>> dist_to_obj;  //!< +inf when the agent is alone
  std::vector<std::vector<bool>> collision;
  std::vector<std::vector<double>> ttc;  //!< seconds in (0, 5], +inf when no overlap ahead
};

/**
 * Constant-velocity extrapolation for TTC uses the finite-difference velocity of each
 * trajectory (backward difference, forward at step 0), so logged and simulated data are
 * treated alike.
 */
InteractiveFeatures interactive_features(const std::vector<std::vector<AgentState>> & agents, double dt = kDt);

struct MapFeatures
{
  std::vector<std::vector<double>> dist_to_road_edge;
  std::vector<std::vector<bool>> offroad;
};

MapFeatures map_features(const std::vector<std::vector<AgentState>> & agents, std::span<const Vec2> drivable_area);
}  // namespace agentsim

#endif  // AGENTSIM__METRICS__FEATURES_HPP_
