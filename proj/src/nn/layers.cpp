#include "agentsim/nn/layers.hpp"

#include "agentsim/error.hpp"

#include <cmath>

namespace agentsim::nn
{
Linear::Linear(ParamStore & store, const std::string & name, std::size_t in, std::size_t out, Rng & rng)
{
  weight = store.create(name + ".weight", out, in, Init::uniform_fan_in, rng);
  bias = store.create(name + ".bias", 1, out, Init::zeros, rng);
}

Mlp::Mlp(ParamStore & store, const std::string & name, const std::vector<std::size_t> & widths, Rng & rng)
{
  require(widths.size() >= 2, "Mlp needs at least input and output widths");
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    layers.emplace_back(store, name + "." + std::to_string(i), widths[i], widths[i + 1], rng);
  }
}

Tensor Mlp::forward(const Tensor & x) const
{
  require(x.cols() == in_features(), "Mlp: input width mismatch");
  Tensor h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i].forward(h);
    if (i + 1 < layers.size()) {
      h = relu(h);
    }
  }
  return h;
}

LayerNorm::LayerNorm(ParamStore & store, const std::string & name, std::size_t dim, Rng & rng)
{
  gamma = store.create(name + ".gamma", 1, dim, Init::ones, rng);
  beta = store.create(name + ".beta", 1, dim, Init::zeros, rng);
}

Tensor scaled_dot_product_attention(
  const Tensor & q, const Tensor & k, const Tensor & v, std::size_t heads, const Mask * mask)
{
  const std::size_t d = q.cols();
  require(heads > 0 && d % heads == 0, "attention: model dimension not divisible by head count");
  require(k.cols() == d && v.cols() == d, "attention: q/k/v widths differ");
  require(k.rows() == v.rows(), "attention: key and value counts differ");
  const std::size_t dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  if (heads == 1) {
    return matmul(softmax_rows(scale(matmul_nt(q, k), inv_sqrt), mask), v);
  }
  std::vector<Tensor> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const Tensor qh = slice_cols(q, h * dh, dh);
    const Tensor kh = slice_cols(k, h * dh, dh);
    const Tensor vh = slice_cols(v, h * dh, dh);
    outs.push_back(matmul(softmax_rows(scale(matmul_nt(qh, kh), inv_sqrt), mask), vh));
  }
  return concat_cols(outs);
}

MultiHeadAttention::MultiHeadAttention(
  ParamStore & store, const std::string & name, std::size_t query_dim, std::size_t kv_dim,
  std::size_t model_dim, std::size_t out_dim, std::size_t n_heads, Rng & rng)
: heads(n_heads)
{
  require(n_heads > 0 && model_dim % n_heads == 0, "MultiHeadAttention: model dim not divisible by heads");
  q_proj = Linear(store, name + ".q", query_dim, model_dim, rng);
  k_proj = Linear(store, name + ".k", kv_dim, model_dim, rng);
  v_proj = Linear(store, name + ".v", kv_dim, model_dim, rng);
  out_proj = Linear(store, name + ".out", model_dim, out_dim, rng);
}

Tensor MultiHeadAttention::forward(
  const Tensor & query, const Tensor & key, const Tensor & value, const Mask * mask) const
{
  const Tensor q = q_proj.forward(query);
  const Tensor k = k_proj.forward(key);
  const Tensor v = v_proj.forward(value);
  return out_proj.forward(scaled_dot_product_attention(q, k, v, heads, mask));
}

std::vector<double> sinusoidal_encode(double x, double y, std::size_t dim)
{
  require(dim > 0 && dim % 2 == 0, "sinusoidal_encode: dimension must be even");
  const std::size_t half = dim / 2;
  std::vector<double> out(dim);
  const double coords[2] = {x, y};
  for (std::size_t axis = 0; axis < 2; ++axis) {
    for (std::size_t j = 0; j < half; ++j) {
      const std::size_t pair = j / 2;
      const double freq = std::pow(10000.0, -2.0 * static_cast<double>(pair) / static_cast<double>(half));
      const double phase = coords[axis] * freq;
      out[axis * half + j] = (j % 2 == 0) ? std::sin(phase) : std::cos(phase);
    }
  }
  return out;
}

Tensor sinusoidal_encode_rows(const std::vector<std::pair<double, double>> & positions, std::size_t dim)
{
  std::vector<double> values;
  values.reserve(positions.size() * dim);
  for (const auto & [x, y] : positions) {
    const auto row = sinusoidal_encode(x, y, dim);
    values.insert(values.end(), row.begin(), row.end());
  }
  return Tensor::from(positions.size(), dim, std::move(values));
}
}  // namespace agentsim::nn
