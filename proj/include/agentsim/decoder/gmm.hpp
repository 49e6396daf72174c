#ifndef AGENTSIM__DECODER__GMM_HPP_
#define AGENTSIM__DECODER__GMM_HPP_

#include "agentsim/nn/tensor.hpp"
#include "agentsim/scenario/types.hpp"

#include <span>
#include <vector>

namespace agentsim
{
inline constexpr double kLogSigmaClamp = 5.0;
inline constexpr double kRhoScale = 0.999;

struct GaussianStep
{
  double mu_x = 0.0;
  double mu_y = 0.0;
  double sigma_x = 1.0;
  double sigma_y = 1.0;
  double rho = 0.0;
};

/// One mode; coordinates are in the frame of the agent's current pose.
struct GmmMode
{
  double prob = 0.0;
  std::vector<GaussianStep> steps;  //!< Horizon steps 1..H.
  double vx = 0.0;
  double vy = 0.0;
  double sin_heading = 0.0;
  double cos_heading = 1.0;
};

struct GmmPrediction
{
  std::vector<GmmMode> modes;
};

/// Differentiable form, one row per mode.
struct GmmTensors
{
  nn::Tensor logits;  //!< K x 1
  nn::Tensor vel;     //!< K x 2 [m/s]
  nn::Tensor head;    //!< K x 2 (sin, cos), not normalized
  nn::Tensor mu_x;    //!< K x H
  nn::Tensor mu_y;
  nn::Tensor sigma_x;
  nn::Tensor sigma_y;
  nn::Tensor rho;
};

/// Raw head output width for horizon H: logit, vel(2), heading(2), then mu_x, mu_y, a, b, c blocks of H.
inline constexpr std::size_t gmm_raw_width(std::size_t horizon) { return 5 + 5 * horizon; }

/**
 * Maps raw head outputs (K x gmm_raw_width(H)) to GMM parameters:
 * mu_h = (h / H) * intention_point + raw, sigma = exp(clamp(raw, -5, 5)),
 * rho = 0.999 tanh(raw), velocity = 10 * raw.
 */
GmmTensors gmm_from_raw(const nn::Tensor & raw, std::span<const Vec2> intention_points, std::size_t horizon);

/// Numeric snapshot with softmax probabilities.
GmmPrediction to_prediction(const GmmTensors & t);
}  // namespace agentsim

#endif  // AGENTSIM__DECODER__GMM_HPP_
