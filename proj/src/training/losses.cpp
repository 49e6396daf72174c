#include "agentsim/training/losses.hpp"

#include "agentsim/decoder/intention_points.hpp"
#include "agentsim/error.hpp"
#include "agentsim/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace agentsim
{
void LossWeights::validate() const
{
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !(lambda3 >= 0.0)) {
    throw ValidationError("loss weights must be non-negative");
  }
}

double nll_loss(const GaussianStep & g, double target_x, double target_y)
{
  if (!(g.sigma_x > 0.0) || !(g.sigma_y > 0.0) || !(std::abs(g.rho) < 1.0)) {
    throw ValidationError("nll_loss: parameters outside sigma > 0, |rho| < 1");
  }
  const double dx = (target_x - g.mu_x) / g.sigma_x;
  const double dy = (target_y - g.mu_y) / g.sigma_y;
  const double one_m = 1.0 - g.rho * g.rho;
  return std::log(2.0 * std::numbers::pi) + std::log(g.sigma_x) + std::log(g.sigma_y) + 0.5 * std::log(one_m) +
         (dx * dx - 2.0 * g.rho * dx * dy + dy * dy) / (2.0 * one_m);
}

std::size_t select_positive_mode(std::span<const Vec2> intention_points, std::span<const Vec2> future_waypoints)
{
  require(!future_waypoints.empty(), "select_positive_mode: no future waypoint");
  require(!intention_points.empty(), "select_positive_mode: no intention points");
  const std::size_t n = std::min<std::size_t>(10, future_waypoints.size());
  return nearest_point(intention_points, future_waypoints[n - 1]);
}

StepLoss step_loss(const GmmTensors & pred, std::size_t positive, const StepTarget & target, const LossWeights & w)
{
  const std::size_t k = pred.logits.rows();
  const std::size_t horizon = pred.mu_x.cols();
  require(positive < k, "step_loss: positive mode out of range");
  const std::size_t n = target.waypoints.size();
  if (n == 0 || n > horizon) {
    throw ValidationError("step_loss: ground truth must cover 1..H horizon steps");
  }

  const auto row = [&](const nn::Tensor & t, std::size_t cols) {
    return nn::slice_cols(nn::gather_rows(t, {positive}), 0, cols);
  };
  std::vector<double> tx(n);
  std::vector<double> ty(n);
  for (std::size_t h = 0; h < n; ++h) {
    tx[h] = target.waypoints[h].x;
    ty[h] = target.waypoints[h].y;
  }
  const nn::Tensor nll = nn::mean(nn::bivariate_nll(row(pred.mu_x, n), row(pred.mu_y, n), row(pred.sigma_x, n),
    row(pred.sigma_y, n), row(pred.rho, n), tx, ty));

  // Cross-entropy over mode logits, shifted by the (constant) max for stability.
  const auto logit = pred.logits.data();
  const double top = *std::max_element(logit.begin(), logit.end());
  const nn::Tensor shifted = nn::add_scalar(pred.logits, -top);
  const nn::Tensor ce = nn::sub(nn::log(nn::sum(nn::exp(shifted))), nn::gather_rows(shifted, {positive}));

  const nn::Tensor vel = nn::sum(nn::abs(nn::sub(nn::gather_rows(pred.vel, {positive}),
    nn::Tensor::from(1, 2, {target.velocity.x, target.velocity.y}))));
  const nn::Tensor head = nn::sum(nn::abs(nn::sub(nn::gather_rows(pred.head, {positive}),
    nn::Tensor::from(1, 2, {target.sin_heading, target.cos_heading}))));

  StepLoss out;
  out.nll = nll.item();
  out.ce = ce.item();
  out.vel = vel.item();
  out.heading = head.item();
  out.total = nn::add(nn::add(nn::scale(nn::add(nll, ce), w.lambda1), nn::scale(vel, w.lambda2)),
    nn::scale(head, w.lambda3));
  return out;
}
}  // namespace agentsim
