#ifndef AGENTSIM__NN__LAYERS_HPP_
#define AGENTSIM__NN__LAYERS_HPP_

#include "agentsim/nn/ops.hpp"
#include "agentsim/nn/param_store.hpp"

#include <string>
#include <vector>

namespace agentsim::nn
{
class Linear
{
public:
  Linear() = default;
  Linear(ParamStore & store, const std::string & name, std::size_t in, std::size_t out, Rng & rng);

  Tensor forward(const Tensor & x) const { return linear(x, weight, bias); }

  Tensor weight;  //!< out x in
  Tensor bias;    //!< 1 x out
};

/// Linear layers with ReLU between them; the last layer is linear.
class Mlp
{
public:
  Mlp() = default;
  /// widths = {in, hidden..., out}; widths.size() - 1 layers.
  Mlp(ParamStore & store, const std::string & name, const std::vector<std::size_t> & widths, Rng & rng);

  Tensor forward(const Tensor & x) const;
  std::size_t in_features() const { return layers.front().weight.cols(); }
  std::size_t out_features() const { return layers.back().weight.rows(); }

  std::vector<Linear> layers;
};

class LayerNorm
{
public:
  LayerNorm() = default;
  LayerNorm(ParamStore & store, const std::string & name, std::size_t dim, Rng & rng);

  Tensor forward(const Tensor & x) const { return layer_norm(x, gamma, beta); }

  Tensor gamma;
  Tensor beta;
};

/**
 * @brief Scaled dot-product attention over already projected inputs.
 *
 * q: n x d, k and v: m x d with d divisible by heads. Returns the n x d
 * concatenation of the per-head outputs (no output projection).
 */
Tensor scaled_dot_product_attention(
  const Tensor & q, const Tensor & k, const Tensor & v, std::size_t heads, const Mask * mask = nullptr);

class MultiHeadAttention
{
public:
  MultiHeadAttention() = default;
  MultiHeadAttention(
    ParamStore & store, const std::string & name, std::size_t query_dim, std::size_t kv_dim,
    std::size_t model_dim, std::size_t out_dim, std::size_t heads, Rng & rng);

  Tensor forward(const Tensor & query, const Tensor & key, const Tensor & value, const Mask * mask = nullptr) const;

  Linear q_proj, k_proj, v_proj, out_proj;
  std::size_t heads = 1;
};

/**
 * @brief Sinusoidal embedding of a 2-D position.
 *
 * Each coordinate gets dim / 2 entries laid out as interleaved (sin, cos)
 * pairs at frequencies 10000^(-2p / (dim / 2)) rad/m; the x block precedes
 * the y block. Throws on odd dim.
 */
std::vector<double> sinusoidal_encode(double x, double y, std::size_t dim);

/// Row-wise sinusoidal_encode of n positions -> n x dim constant tensor.
Tensor sinusoidal_encode_rows(const std::vector<std::pair<double, double>> & positions, std::size_t dim);
}  // namespace agentsim::nn

#endif  // AGENTSIM__NN__LAYERS_HPP_
