#ifndef AGENTSIM__NN__KERNELS_HPP_
#define AGENTSIM__NN__KERNELS_HPP_

#include <cstddef>

namespace agentsim::nn::kernels
{
enum class Trans { no, yes };

/**
 * @brief C (+)= op(A) * op(B) on row-major buffers.
 *
 * op(A) is m x k and op(B) is k x n. With Trans::yes the operand is stored
 * transposed (A as k x m, B as n x k). C is m x n.
 *
 * Rows of C are split into fixed-size panels processed by an OpenMP loop. The
 * panel size does not depend on the thread count, so the result is
 * bit-identical for any number of threads.
 */
void gemm(
  Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const double * a,
  const double * b, double * c, bool accumulate);

/// Rows per OpenMP panel in gemm().
inline constexpr std::size_t kGemmPanelRows = 64;

namespace reference
{
/// Naive triple loop with the same contract as kernels::gemm(); serial.
void gemm(
  Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const double * a,
  const double * b, double * c, bool accumulate);
}  // namespace reference
}  // namespace agentsim::nn::kernels

#endif  // AGENTSIM__NN__KERNELS_HPP_
