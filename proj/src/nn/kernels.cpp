#include "agentsim/nn/kernels.hpp"

#include <Eigen/Core>

#include <algorithm>

namespace agentsim::nn::kernels
{
namespace
{
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

void gemm_panel(
  Trans ta, Trans tb, std::size_t row0, std::size_t rows, std::size_t m, std::size_t n,
  std::size_t k, const double * a, const double * b, double * c, bool accumulate)
{
  const auto em = static_cast<Eigen::Index>(m);
  const auto en = static_cast<Eigen::Index>(n);
  const auto ek = static_cast<Eigen::Index>(k);
  const auto r0 = static_cast<Eigen::Index>(row0);
  const auto nr = static_cast<Eigen::Index>(rows);

  MutMap c_panel(c + row0 * n, nr, en);
  if (!accumulate) {
    c_panel.setZero();
  }
  auto run = [&](const auto & a_panel) {
    if (tb == Trans::no) {
      c_panel.noalias() += a_panel * ConstMap(b, ek, en);
    } else {
      c_panel.noalias() += a_panel * ConstMap(b, en, ek).transpose();
    }
  };
  if (ta == Trans::no) {
    run(ConstMap(a, em, ek).middleRows(r0, nr));
  } else {
    run(ConstMap(a, ek, em).middleCols(r0, nr).transpose());
  }
}
}  // namespace

void gemm(
  Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const double * a,
  const double * b, double * c, bool accumulate)
{
  if (m == 0 || n == 0) {
    return;
  }
  if (k == 0) {
    if (!accumulate) {
      std::fill(c, c + m * n, 0.0);
    }
    return;
  }
  const std::size_t panels = (m + kGemmPanelRows - 1) / kGemmPanelRows;
  if (panels == 1) {
    gemm_panel(ta, tb, 0, m, m, n, k, a, b, c, accumulate);
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < panels; ++p) {
    const std::size_t row0 = p * kGemmPanelRows;
    const std::size_t rows = std::min(kGemmPanelRows, m - row0);
    gemm_panel(ta, tb, row0, rows, m, n, k, a, b, c, accumulate);
  }
}

namespace reference
{
void gemm(
  Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const double * a,
  const double * b, double * c, bool accumulate)
{
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = ta == Trans::no ? a[i * k + p] : a[p * m + i];
        const double bv = tb == Trans::no ? b[p * n + j] : b[j * k + p];
        acc += av * bv;
      }
      c[i * n + j] = accumulate ? c[i * n + j] + acc : acc;
    }
  }
}
}  // namespace reference
}  // namespace agentsim::nn::kernels
