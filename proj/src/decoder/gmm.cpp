#include "agentsim/decoder/gmm.hpp"

#include "agentsim/error.hpp"
#include "agentsim/model/model_config.hpp"
#include "agentsim/nn/ops.hpp"

#include <cmath>

namespace agentsim
{
GmmTensors gmm_from_raw(const nn::Tensor & raw, std::span<const Vec2> intention_points, std::size_t horizon)
{
  const std::size_t k = raw.rows();
  require(raw.cols() == gmm_raw_width(horizon), "gmm_from_raw: raw width does not match the horizon");
  require(intention_points.size() == k, "gmm_from_raw: one intention point per mode required");
  std::vector<double> ax(k * horizon);
  std::vector<double> ay(k * horizon);
  for (std::size_t m = 0; m < k; ++m) {
    for (std::size_t h = 0; h < horizon; ++h) {
      const double f = static_cast<double>(h + 1) / static_cast<double>(horizon);
      ax[m * horizon + h] = f * intention_points[m].x;
      ay[m * horizon + h] = f * intention_points[m].y;
    }
  }
  const std::size_t base = 5;
  GmmTensors g;
  g.logits = nn::slice_cols(raw, 0, 1);
  g.vel = nn::scale(nn::slice_cols(raw, 1, 2), kVelocityOutputScale);
  g.head = nn::slice_cols(raw, 3, 2);
  g.mu_x = nn::add(nn::slice_cols(raw, base, horizon), nn::Tensor::from(k, horizon, std::move(ax)));
  g.mu_y = nn::add(nn::slice_cols(raw, base + horizon, horizon), nn::Tensor::from(k, horizon, std::move(ay)));
  g.sigma_x = nn::exp(nn::clamp(nn::slice_cols(raw, base + 2 * horizon, horizon), -kLogSigmaClamp, kLogSigmaClamp));
  g.sigma_y = nn::exp(nn::clamp(nn::slice_cols(raw, base + 3 * horizon, horizon), -kLogSigmaClamp, kLogSigmaClamp));
  g.rho = nn::scale(nn::tanh(nn::slice_cols(raw, base + 4 * horizon, horizon)), kRhoScale);
  return g;
}

GmmPrediction to_prediction(const GmmTensors & t)
{
  const std::size_t k = t.logits.rows();
  const std::size_t horizon = t.mu_x.cols();
  GmmPrediction p;
  p.modes.resize(k);
  double max_logit = -INFINITY;
  for (std::size_t m = 0; m < k; ++m) {
    max_logit = std::max(max_logit, t.logits.at(m, 0));
  }
  double z = 0.0;
  for (std::size_t m = 0; m < k; ++m) {
    p.modes[m].prob = std::exp(t.logits.at(m, 0) - max_logit);
    z += p.modes[m].prob;
  }
  for (std::size_t m = 0; m < k; ++m) {
    GmmMode & mode = p.modes[m];
    mode.prob /= z;
    mode.vx = t.vel.at(m, 0);
    mode.vy = t.vel.at(m, 1);
    mode.sin_heading = t.head.at(m, 0);
    mode.cos_heading = t.head.at(m, 1);
    mode.steps.resize(horizon);
    for (std::size_t h = 0; h < horizon; ++h) {
      mode.steps[h] = {
        t.mu_x.at(m, h), t.mu_y.at(m, h), t.sigma_x.at(m, h), t.sigma_y.at(m, h), t.rho.at(m, h)};
    }
  }
  return p;
}
}  // namespace agentsim
