#ifndef AGENTSIM__NN__OPS_HPP_
#define AGENTSIM__NN__OPS_HPP_

#include "agentsim/nn/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace agentsim::nn
{
/// Row x column boolean mask; allowed[r * cols + c] != 0 keeps the entry.
struct Mask
{
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> allowed;

  bool at(std::size_t r, std::size_t c) const { return allowed[r * cols + c] != 0; }
};

// Linear algebra.
Tensor matmul(const Tensor & a, const Tensor & b);
/// a * b^T
Tensor matmul_nt(const Tensor & a, const Tensor & b);
/// x * w^T + b, with w: out x in and b: 1 x out.
Tensor linear(const Tensor & x, const Tensor & w, const Tensor & b);

// Elementwise.
Tensor add(const Tensor & a, const Tensor & b);
Tensor sub(const Tensor & a, const Tensor & b);
Tensor mul(const Tensor & a, const Tensor & b);
Tensor scale(const Tensor & a, double s);
Tensor add_scalar(const Tensor & a, double s);
Tensor relu(const Tensor & a);
Tensor tanh(const Tensor & a);
Tensor exp(const Tensor & a);
Tensor log(const Tensor & a);
Tensor abs(const Tensor & a);
/// Values outside [lo, hi] are clipped and receive zero gradient.
Tensor clamp(const Tensor & a, double lo, double hi);

// Shape manipulation.
/// Tiles a 1 x n row into rows x n.
Tensor broadcast_rows(const Tensor & row, std::size_t rows);
/// a (m x n) + row (1 x n) broadcast over rows.
Tensor add_row(const Tensor & a, const Tensor & row);
Tensor concat_cols(const std::vector<Tensor> & parts);
Tensor concat_rows(const std::vector<Tensor> & parts);
Tensor slice_cols(const Tensor & a, std::size_t begin, std::size_t count);
Tensor gather_rows(const Tensor & a, const std::vector<std::size_t> & index);

// Normalization and probability.
/// Per-row layer norm; zero-variance rows map to beta (variance floored by eps).
Tensor layer_norm(const Tensor & x, const Tensor & gamma, const Tensor & beta, double eps = 1e-5);
/// Row softmax; masked entries get -inf logits (probability 0). A fully masked row throws.
Tensor softmax_rows(const Tensor & x, const Mask * mask = nullptr);
Tensor log_softmax_rows(const Tensor & x);

// Reductions.
Tensor sum(const Tensor & a);
Tensor mean(const Tensor & a);
/// Elementwise max over each [begin, end) row range; gradient flows to the first argmax row.
Tensor segment_max(const Tensor & x, const std::vector<std::pair<std::size_t, std::size_t>> & segments);
/// Elementwise max over rows with valid[r] != 0. Throws if no row is valid.
Tensor maxpool_rows(const Tensor & x, const std::vector<std::uint8_t> & valid);

/**
 * @brief Elementwise bivariate normal negative log density.
 *
 * All inputs share one shape; target_x / target_y are constants. For residual
 * d = target - mu the value is
 *   log(2 pi) + log sx + log sy + 0.5 log(1 - rho^2)
 *     + (dx^2 - 2 rho dx dy + dy^2) / (2 (1 - rho^2)),  dx = d_x / sx, dy = d_y / sy.
 */
Tensor bivariate_nll(
  const Tensor & mu_x, const Tensor & mu_y, const Tensor & sigma_x, const Tensor & sigma_y,
  const Tensor & rho, const std::vector<double> & target_x, const std::vector<double> & target_y);
}  // namespace agentsim::nn

#endif  // AGENTSIM__NN__OPS_HPP_
