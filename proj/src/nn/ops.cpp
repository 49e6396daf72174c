#include "agentsim/nn/ops.hpp"

#include "agentsim/error.hpp"
#include "agentsim/nn/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace agentsim::nn
{
using detail::make_result;
using kernels::Trans;

namespace
{
/// Gradient buffer of a parent, or nullptr when the parent is constant.
double * grad_of(const NodePtr & p)
{
  if (!p->requires_grad) {
    return nullptr;
  }
  p->ensure_grad();
  return p->grad.data();
}

void require_same_shape(const Tensor & a, const Tensor & b, const char * op)
{
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ValidationError(
      std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
      std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

template <typename Forward, typename Derivative>
Tensor unary(const Tensor & a, const char * op, Forward f, Derivative df)
{
  std::vector<double> out(a.size());
  const auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = f(x[i]);
  }
  return make_result(a.rows(), a.cols(), std::move(out), op, {a.node()}, [df](Node & self) {
    const auto & in = self.parents[0];
    if (double * g = grad_of(in)) {
      for (std::size_t i = 0; i < self.size(); ++i) {
        g[i] += self.grad[i] * df(in->value[i], self.value[i]);
      }
    }
  });
}
}  // namespace

Tensor matmul(const Tensor & a, const Tensor & b)
{
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n);
  kernels::gemm(Trans::no, Trans::no, m, n, k, a.data().data(), b.data().data(), out.data(), false);
  return make_result(m, n, std::move(out), "matmul", {a.node(), b.node()}, [m, n, k](Node & self) {
    const auto & pa = self.parents[0];
    const auto & pb = self.parents[1];
    if (double * ga = grad_of(pa)) {
      kernels::gemm(Trans::no, Trans::yes, m, k, n, self.grad.data(), pb->value.data(), ga, true);
    }
    if (double * gb = grad_of(pb)) {
      kernels::gemm(Trans::yes, Trans::no, k, n, m, pa->value.data(), self.grad.data(), gb, true);
    }
  });
}

Tensor matmul_nt(const Tensor & a, const Tensor & b)
{
  require(a.cols() == b.cols(), "matmul_nt: inner dimensions differ");
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  std::vector<double> out(m * n);
  kernels::gemm(Trans::no, Trans::yes, m, n, k, a.data().data(), b.data().data(), out.data(), false);
  return make_result(m, n, std::move(out), "matmul_nt", {a.node(), b.node()}, [m, n, k](Node & self) {
    const auto & pa = self.parents[0];
    const auto & pb = self.parents[1];
    if (double * ga = grad_of(pa)) {
      kernels::gemm(Trans::no, Trans::no, m, k, n, self.grad.data(), pb->value.data(), ga, true);
    }
    if (double * gb = grad_of(pb)) {
      kernels::gemm(Trans::yes, Trans::no, n, k, m, self.grad.data(), pa->value.data(), gb, true);
    }
  });
}

Tensor linear(const Tensor & x, const Tensor & w, const Tensor & b)
{
  require(x.cols() == w.cols(), "linear: input width does not match weight");
  require(b.rows() == 1 && b.cols() == w.rows(), "linear: bias shape mismatch");
  const std::size_t m = x.rows(), in = x.cols(), out_dim = w.rows();
  std::vector<double> out(m * out_dim);
  for (std::size_t r = 0; r < m; ++r) {
    std::copy(b.data().begin(), b.data().end(), out.begin() + static_cast<std::ptrdiff_t>(r * out_dim));
  }
  kernels::gemm(Trans::no, Trans::yes, m, out_dim, in, x.data().data(), w.data().data(), out.data(), true);
  return make_result(
    m, out_dim, std::move(out), "linear", {x.node(), w.node(), b.node()}, [m, in, out_dim](Node & self) {
      const auto & px = self.parents[0];
      const auto & pw = self.parents[1];
      const auto & pb = self.parents[2];
      if (double * gx = grad_of(px)) {
        kernels::gemm(Trans::no, Trans::no, m, in, out_dim, self.grad.data(), pw->value.data(), gx, true);
      }
      if (double * gw = grad_of(pw)) {
        kernels::gemm(Trans::yes, Trans::no, out_dim, in, m, self.grad.data(), px->value.data(), gw, true);
      }
      if (double * gb = grad_of(pb)) {
        for (std::size_t r = 0; r < m; ++r) {
          for (std::size_t c = 0; c < out_dim; ++c) {
            gb[c] += self.grad[r * out_dim + c];
          }
        }
      }
    });
}

Tensor add(const Tensor & a, const Tensor & b)
{
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a.data()[i] + b.data()[i];
  }
  return make_result(a.rows(), a.cols(), std::move(out), "add", {a.node(), b.node()}, [](Node & self) {
    for (const auto & p : self.parents) {
      if (double * g = grad_of(p)) {
        for (std::size_t i = 0; i < self.size(); ++i) {
          g[i] += self.grad[i];
        }
      }
    }
  });
}

Tensor sub(const Tensor & a, const Tensor & b)
{
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a.data()[i] - b.data()[i];
  }
  return make_result(a.rows(), a.cols(), std::move(out), "sub", {a.node(), b.node()}, [](Node & self) {
    if (double * g = grad_of(self.parents[0])) {
      for (std::size_t i = 0; i < self.size(); ++i) {
        g[i] += self.grad[i];
      }
    }
    if (double * g = grad_of(self.parents[1])) {
      for (std::size_t i = 0; i < self.size(); ++i) {
        g[i] -= self.grad[i];
      }
    }
  });
}

Tensor mul(const Tensor & a, const Tensor & b)
{
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a.data()[i] * b.data()[i];
  }
  return make_result(a.rows(), a.cols(), std::move(out), "mul", {a.node(), b.node()}, [](Node & self) {
    const auto & pa = self.parents[0];
    const auto & pb = self.parents[1];
    if (double * g = grad_of(pa)) {
      for (std::size_t i = 0; i < self.size(); ++i) {
        g[i] += self.grad[i] * pb->value[i];
      }
    }
    if (double * g = grad_of(pb)) {
      for (std::size_t i = 0; i < self.size(); ++i) {
        g[i] += self.grad[i] * pa->value[i];
      }
    }
  });
}

Tensor scale(const Tensor & a, double s)
{
  return unary(a, "scale", [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor & a, double s)
{
  return unary(a, "add_scalar", [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor relu(const Tensor & a)
{
  return unary(
    a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
    [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh(const Tensor & a)
{
  return unary(
    a, "tanh", [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor exp(const Tensor & a)
{
  return unary(a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor & a)
{
  for (const double v : a.data()) {
    if (!(v > 0.0)) {
      throw NumericError("log of a non-positive value");
    }
  }
  return unary(a, "log", [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor abs(const Tensor & a)
{
  return unary(
    a, "abs", [](double x) { return std::abs(x); },
    [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor clamp(const Tensor & a, double lo, double hi)
{
  return unary(
    a, "clamp", [lo, hi](double x) { return std::clamp(x, lo, hi); },
    [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Tensor broadcast_rows(const Tensor & row, std::size_t rows)
{
  require(row.rows() == 1, "broadcast_rows: input must be a single row");
  const std::size_t n = row.cols();
  std::vector<double> out(rows * n);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy(row.data().begin(), row.data().end(), out.begin() + static_cast<std::ptrdiff_t>(r * n));
  }
  return make_result(rows, n, std::move(out), "broadcast_rows", {row.node()}, [rows, n](Node & self) {
    if (double * g = grad_of(self.parents[0])) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
          g[c] += self.grad[r * n + c];
        }
      }
    }
  });
}

Tensor add_row(const Tensor & a, const Tensor & row)
{
  require(row.rows() == 1 && row.cols() == a.cols(), "add_row: row shape mismatch");
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(a.data().begin(), a.data().end());
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      out[r * n + c] += row.data()[c];
    }
  }
  return make_result(m, n, std::move(out), "add_row", {a.node(), row.node()}, [m, n](Node & self) {
    if (double * g = grad_of(self.parents[0])) {
      for (std::size_t i = 0; i < m * n; ++i) {
        g[i] += self.grad[i];
      }
    }
    if (double * g = grad_of(self.parents[1])) {
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
          g[c] += self.grad[r * n + c];
        }
      }
    }
  });
}

Tensor concat_cols(const std::vector<Tensor> & parts)
{
  require(!parts.empty(), "concat_cols: no inputs");
  const std::size_t m = parts.front().rows();
  std::size_t n = 0;
  std::vector<std::size_t> widths;
  std::vector<NodePtr> parents;
  for (const auto & p : parts) {
    require(p.rows() == m, "concat_cols: row counts differ");
    widths.push_back(p.cols());
    n += p.cols();
    parents.push_back(p.node());
  }
  std::vector<double> out(m * n);
  std::size_t offset = 0;
  for (const auto & p : parts) {
    for (std::size_t r = 0; r < m; ++r) {
      std::copy_n(p.data().begin() + static_cast<std::ptrdiff_t>(r * p.cols()), p.cols(),
        out.begin() + static_cast<std::ptrdiff_t>(r * n + offset));
    }
    offset += p.cols();
  }
  return make_result(m, n, std::move(out), "concat_cols", std::move(parents), [m, n, widths](Node & self) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < self.parents.size(); ++i) {
      if (double * g = grad_of(self.parents[i])) {
        for (std::size_t r = 0; r < m; ++r) {
          for (std::size_t c = 0; c < widths[i]; ++c) {
            g[r * widths[i] + c] += self.grad[r * n + off + c];
          }
        }
      }
      off += widths[i];
    }
  });
}

Tensor concat_rows(const std::vector<Tensor> & parts)
{
  require(!parts.empty(), "concat_rows: no inputs");
  const std::size_t n = parts.front().cols();
  std::size_t m = 0;
  std::vector<std::size_t> heights;
  std::vector<NodePtr> parents;
  std::vector<double> out;
  for (const auto & p : parts) {
    require(p.cols() == n, "concat_rows: column counts differ");
    heights.push_back(p.rows());
    m += p.rows();
    parents.push_back(p.node());
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  return make_result(m, n, std::move(out), "concat_rows", std::move(parents), [n, heights](Node & self) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < self.parents.size(); ++i) {
      const std::size_t len = heights[i] * n;
      if (double * g = grad_of(self.parents[i])) {
        for (std::size_t j = 0; j < len; ++j) {
          g[j] += self.grad[off + j];
        }
      }
      off += len;
    }
  });
}

Tensor slice_cols(const Tensor & a, std::size_t begin, std::size_t count)
{
  require(begin + count <= a.cols(), "slice_cols: range out of bounds");
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * count);
  for (std::size_t r = 0; r < m; ++r) {
    std::copy_n(a.data().begin() + static_cast<std::ptrdiff_t>(r * n + begin), count,
      out.begin() + static_cast<std::ptrdiff_t>(r * count));
  }
  return make_result(m, count, std::move(out), "slice_cols", {a.node()}, [m, n, begin, count](Node & self) {
    if (double * g = grad_of(self.parents[0])) {
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < count; ++c) {
          g[r * n + begin + c] += self.grad[r * count + c];
        }
      }
    }
  });
}

Tensor gather_rows(const Tensor & a, const std::vector<std::size_t> & index)
{
  const std::size_t n = a.cols();
  std::vector<double> out(index.size() * n);
  for (std::size_t i = 0; i < index.size(); ++i) {
    require(index[i] < a.rows(), "gather_rows: index out of range");
    std::copy_n(a.data().begin() + static_cast<std::ptrdiff_t>(index[i] * n), n,
      out.begin() + static_cast<std::ptrdiff_t>(i * n));
  }
  return make_result(index.size(), n, std::move(out), "gather_rows", {a.node()}, [n, index](Node & self) {
    if (double * g = grad_of(self.parents[0])) {
      for (std::size_t i = 0; i < index.size(); ++i) {
        for (std::size_t c = 0; c < n; ++c) {
          g[index[i] * n + c] += self.grad[i * n + c];
        }
      }
    }
  });
}

Tensor layer_norm(const Tensor & x, const Tensor & gamma, const Tensor & beta, double eps)
{
  const std::size_t m = x.rows(), n = x.cols();
  require(gamma.rows() == 1 && gamma.cols() == n, "layer_norm: gamma shape mismatch");
  require(beta.rows() == 1 && beta.cols() == n, "layer_norm: beta shape mismatch");
  std::vector<double> xhat(m * n), inv_std(m), out(m * n);
  for (std::size_t r = 0; r < m; ++r) {
    const double * row = x.data().data() + r * n;
    double mu = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      mu += row[c];
    }
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      var += (row[c] - mu) * (row[c] - mu);
    }
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < n; ++c) {
      xhat[r * n + c] = (row[c] - mu) * inv_std[r];
      out[r * n + c] = gamma.data()[c] * xhat[r * n + c] + beta.data()[c];
    }
  }
  return make_result(
    m, n, std::move(out), "layer_norm", {x.node(), gamma.node(), beta.node()},
    [m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node & self) {
      const auto & pg = self.parents[1];
      double * gx = grad_of(self.parents[0]);
      double * gg = grad_of(pg);
      double * gb = grad_of(self.parents[2]);
      std::vector<double> dxhat(n);
      for (std::size_t r = 0; r < m; ++r) {
        const double * dy = self.grad.data() + r * n;
        const double * xh = xhat.data() + r * n;
        if (gg || gb) {
          for (std::size_t c = 0; c < n; ++c) {
            if (gg) {
              gg[c] += dy[c] * xh[c];
            }
            if (gb) {
              gb[c] += dy[c];
            }
          }
        }
        if (gx) {
          double mean_d = 0.0, mean_dx = 0.0;
          for (std::size_t c = 0; c < n; ++c) {
            dxhat[c] = dy[c] * pg->value[c];
            mean_d += dxhat[c];
            mean_dx += dxhat[c] * xh[c];
          }
          mean_d /= static_cast<double>(n);
          mean_dx /= static_cast<double>(n);
          for (std::size_t c = 0; c < n; ++c) {
            gx[r * n + c] += inv_std[r] * (dxhat[c] - mean_d - xh[c] * mean_dx);
          }
        }
      }
    });
}

Tensor softmax_rows(const Tensor & x, const Mask * mask)
{
  const std::size_t m = x.rows(), n = x.cols();
  if (mask) {
    require(mask->rows == m && mask->cols == n, "softmax_rows: mask shape mismatch");
  }
  std::vector<double> out(m * n, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    const double * row = x.data().data() + r * n;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n; ++c) {
      if (!mask || mask->at(r, c)) {
        mx = std::max(mx, row[c]);
      }
    }
    if (mx == -std::numeric_limits<double>::infinity()) {
      throw ValidationError("softmax_rows: every entry of a row is masked");
    }
    double total = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      if (!mask || mask->at(r, c)) {
        out[r * n + c] = std::exp(row[c] - mx);
        total += out[r * n + c];
      }
    }
    for (std::size_t c = 0; c < n; ++c) {
      out[r * n + c] /= total;
    }
  }
  return make_result(m, n, std::move(out), "softmax_rows", {x.node()}, [m, n](Node & self) {
    if (double * g = grad_of(self.parents[0])) {
      for (std::size_t r = 0; r < m; ++r) {
        const double * y = self.value.data() + r * n;
        const double * dy = self.grad.data() + r * n;
        double dot = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
          dot += dy[c] * y[c];
        }
        for (std::size_t c = 0; c < n; ++c) {
          g[r * n + c] += y[c] * (dy[c] - dot);
        }
      }
    }
  });
}

Tensor log_softmax_rows(const Tensor & x)
{
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> out(m * n), prob(m * n);
  for (std::size_t r = 0; r < m; ++r) {
    const double * row = x.data().data() + r * n;
    const double mx = *std::max_element(row, row + n);
    double total = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      total += std::exp(row[c] - mx);
    }
    const double lse = mx + std::log(total);
    for (std::size_t c = 0; c < n; ++c) {
      out[r * n + c] = row[c] - lse;
      prob[r * n + c] = std::exp(out[r * n + c]);
    }
  }
  return make_result(
    m, n, std::move(out), "log_softmax_rows", {x.node()}, [m, n, prob = std::move(prob)](Node & self) {
      if (double * g = grad_of(self.parents[0])) {
        for (std::size_t r = 0; r < m; ++r) {
          double total = 0.0;
          for (std::size_t c = 0; c < n; ++c) {
            total += self.grad[r * n + c];
          }
          for (std::size_t c = 0; c < n; ++c) {
            g[r * n + c] += self.grad[r * n + c] - prob[r * n + c] * total;
          }
        }
      }
    });
}

Tensor sum(const Tensor & a)
{
  double total = 0.0;
  for (const double v : a.data()) {
    total += v;
  }
  return make_result(1, 1, {total}, "sum", {a.node()}, [](Node & self) {
    const auto & p = self.parents[0];
    if (double * g = grad_of(p)) {
      for (std::size_t i = 0; i < p->size(); ++i) {
        g[i] += self.grad[0];
      }
    }
  });
}

Tensor mean(const Tensor & a)
{
  require(a.size() > 0, "mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor segment_max(const Tensor & x, const std::vector<std::pair<std::size_t, std::size_t>> & segments)
{
  const std::size_t n = x.cols();
  std::vector<double> out(segments.size() * n);
  std::vector<std::size_t> argmax(segments.size() * n);
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const auto [begin, end] = segments[s];
    require(begin < end && end <= x.rows(), "segment_max: empty or out-of-range segment");
    for (std::size_t c = 0; c < n; ++c) {
      std::size_t best = begin;
      for (std::size_t r = begin + 1; r < end; ++r) {
        if (x.data()[r * n + c] > x.data()[best * n + c]) {
          best = r;
        }
      }
      argmax[s * n + c] = best;
      out[s * n + c] = x.data()[best * n + c];
    }
  }
  return make_result(
    segments.size(), n, std::move(out), "segment_max", {x.node()},
    [n, argmax = std::move(argmax)](Node & self) {
      if (double * g = grad_of(self.parents[0])) {
        for (std::size_t i = 0; i < argmax.size(); ++i) {
          g[argmax[i] * n + i % n] += self.grad[i];
        }
      }
    });
}

Tensor maxpool_rows(const Tensor & x, const std::vector<std::uint8_t> & valid)
{
  require(valid.size() == x.rows(), "maxpool_rows: mask length does not match row count");
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < valid.size(); ++r) {
    if (valid[r]) {
      rows.push_back(r);
    }
  }
  require(!rows.empty(), "maxpool_rows: no valid rows");
  const Tensor picked = gather_rows(x, rows);
  return segment_max(picked, {{0, rows.size()}});
}

Tensor bivariate_nll(
  const Tensor & mu_x, const Tensor & mu_y, const Tensor & sigma_x, const Tensor & sigma_y,
  const Tensor & rho, const std::vector<double> & target_x, const std::vector<double> & target_y)
{
  require_same_shape(mu_x, mu_y, "bivariate_nll");
  require_same_shape(mu_x, sigma_x, "bivariate_nll");
  require_same_shape(mu_x, sigma_y, "bivariate_nll");
  require_same_shape(mu_x, rho, "bivariate_nll");
  const std::size_t size = mu_x.size();
  require(target_x.size() == size && target_y.size() == size, "bivariate_nll: target size mismatch");
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  std::vector<double> out(size);
  for (std::size_t i = 0; i < size; ++i) {
    const double sx = sigma_x.data()[i], sy = sigma_y.data()[i], r = rho.data()[i];
    require(sx > 0.0 && sy > 0.0 && std::abs(r) < 1.0, "bivariate_nll: parameter outside domain");
    const double dx = (target_x[i] - mu_x.data()[i]) / sx;
    const double dy = (target_y[i] - mu_y.data()[i]) / sy;
    const double q = 1.0 - r * r;
    const double z = dx * dx - 2.0 * r * dx * dy + dy * dy;
    out[i] = log_2pi + std::log(sx) + std::log(sy) + 0.5 * std::log(q) + z / (2.0 * q);
  }
  return make_result(
    mu_x.rows(), mu_x.cols(), std::move(out), "bivariate_nll",
    {mu_x.node(), mu_y.node(), sigma_x.node(), sigma_y.node(), rho.node()},
    [target_x, target_y](Node & self) {
      double * g_mx = grad_of(self.parents[0]);
      double * g_my = grad_of(self.parents[1]);
      double * g_sx = grad_of(self.parents[2]);
      double * g_sy = grad_of(self.parents[3]);
      double * g_r = grad_of(self.parents[4]);
      for (std::size_t i = 0; i < self.size(); ++i) {
        const double mx = self.parents[0]->value[i], my = self.parents[1]->value[i];
        const double sx = self.parents[2]->value[i], sy = self.parents[3]->value[i];
        const double r = self.parents[4]->value[i];
        const double dx = (target_x[i] - mx) / sx;
        const double dy = (target_y[i] - my) / sy;
        const double q = 1.0 - r * r;
        const double z = dx * dx - 2.0 * r * dx * dy + dy * dy;
        const double up = self.grad[i];
        if (g_mx) {
          g_mx[i] += up * (-(dx - r * dy) / (q * sx));
        }
        if (g_my) {
          g_my[i] += up * (-(dy - r * dx) / (q * sy));
        }
        if (g_sx) {
          g_sx[i] += up * (1.0 / sx - dx * (dx - r * dy) / (q * sx));
        }
        if (g_sy) {
          g_sy[i] += up * (1.0 / sy - dy * (dy - r * dx) / (q * sy));
        }
        if (g_r) {
          g_r[i] += up * (-r / q - dx * dy / q + z * r / (q * q));
        }
      }
    });
}
}  // namespace agentsim::nn
