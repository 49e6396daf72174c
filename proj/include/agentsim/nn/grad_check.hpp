#ifndef AGENTSIM__NN__GRAD_CHECK_HPP_
#define AGENTSIM__NN__GRAD_CHECK_HPP_

#include "agentsim/nn/tensor.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace agentsim::nn
{
struct GradCheckOptions
{
  double h = 1e-5;
  /// 0 checks every coordinate; otherwise a seeded subset of this size per tensor.
  std::size_t max_coords_per_tensor = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult
{
  double max_rel_error = 0.0;
  std::size_t worst_tensor = 0;
  std::size_t worst_index = 0;
  std::size_t coords_checked = 0;
};

/**
 * @brief Central-difference check of analytic gradients.
 *
 * f must build a fresh 1 x 1 graph on every call. The error of one coordinate
 * is |a - n| / max(1, |a|, |n|); the maximum over coordinates is reported.
 */
GradCheckResult grad_check(
  const std::function<Tensor()> & f, const std::vector<Tensor> & params, const GradCheckOptions & options = {});
}  // namespace agentsim::nn

#endif  // AGENTSIM__NN__GRAD_CHECK_HPP_
