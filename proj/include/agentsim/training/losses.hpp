#ifndef AGENTSIM__TRAINING__LOSSES_HPP_
#define AGENTSIM__TRAINING__LOSSES_HPP_

#include "agentsim/decoder/gmm.hpp"
#include "agentsim/nn/tensor.hpp"

#include <span>
#include <vector>

namespace agentsim
{
struct LossWeights
{
  double lambda1 = 1.0;  //!< NLL and mode cross-entropy.
  double lambda2 = 0.5;  //!< Velocity L1.
  double lambda3 = 0.5;  //!< Heading (sin, cos) L1.

  void validate() const;
};

/// Bivariate normal negative log density of target under g. Throws ValidationError outside sigma > 0, |rho| < 1.
double nll_loss(const GaussianStep & g, double target_x, double target_y);

/// Mode whose intention point is nearest to the displacement min(10, n) waypoints ahead; ties to the lowest index.
std::size_t select_positive_mode(std::span<const Vec2> intention_points, std::span<const Vec2> future_waypoints);

/// Ground truth for one decoding step, in the frame of the agent's current pose.
struct StepTarget
{
  std::vector<Vec2> waypoints;  //!< Horizon steps 1..n, n <= H.
  Vec2 velocity;
  double sin_heading = 0.0;
  double cos_heading = 1.0;
};

struct StepLoss
{
  nn::Tensor total;  //!< 1 x 1
  double nll = 0.0;
  double ce = 0.0;
  double vel = 0.0;
  double heading = 0.0;
};

/// lambda1 (horizon-mean NLL + CE) + lambda2 L1(velocity) + lambda3 L1(sin, cos), all on the positive mode.
StepLoss step_loss(const GmmTensors & pred, std::size_t positive, const StepTarget & target, const LossWeights & w);
}  // namespace agentsim

#endif  // AGENTSIM__TRAINING__LOSSES_HPP_
