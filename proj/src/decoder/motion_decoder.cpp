#include "agentsim/decoder/motion_decoder.hpp"

#include "agentsim/error.hpp"

#include <cmath>
#include <numeric>

namespace agentsim
{
MotionDecoder::MotionDecoder(nn::ParamStore & store, const ModelConfig & config, Rng & rng) : config_(config)
{
  const std::size_t dd = config.d_decoder;
  const std::size_t d = config.d_model;
  query_ = store.create("decoder.query", config.modes, dd, nn::Init::uniform_fan_in, rng);
  intention_mlp_ = nn::Mlp(store, "decoder.intention_mlp", {dd, dd, dd}, rng);
  adv_mlp_ = nn::Mlp(store, "decoder.adv_mlp", {dd + 2, dd, dd}, rng);
  self_proj_ = nn::Linear(store, "decoder.self_proj", d, dd, rng);
  for (std::size_t l = 0; l < config.decoder_layers; ++l) {
    const std::string p = "decoder.layer" + std::to_string(l);
    Layer layer;
    layer.self_attn = nn::MultiHeadAttention(store, p + ".self_attn", dd, dd, dd, dd, config.decoder_heads, rng);
    layer.norm1 = nn::LayerNorm(store, p + ".norm1", dd, rng);
    layer.agent_attn = nn::MultiHeadAttention(store, p + ".agent_attn", dd, d, dd, dd, config.decoder_heads, rng);
    layer.norm2 = nn::LayerNorm(store, p + ".norm2", dd, rng);
    layer.map_attn = nn::MultiHeadAttention(store, p + ".map_attn", dd, d, d, dd, config.decoder_heads, rng);
    layer.norm3 = nn::LayerNorm(store, p + ".norm3", dd, rng);
    layer.ffn = nn::Mlp(store, p + ".ffn", {dd, config.ffn_multiplier * dd, dd}, rng);
    layer.norm4 = nn::LayerNorm(store, p + ".norm4", dd, rng);
    layer.head = nn::Mlp(store, p + ".head", {dd, dd, gmm_raw_width(config.horizon)}, rng);
    layers_.push_back(std::move(layer));
  }
}

DecoderState MotionDecoder::initial_state(std::span<const Vec2> points) const
{
  const std::size_t k = points.size();
  require(k >= 1 && k <= config_.modes, "decoder: intention point count must lie in [1, modes]");
  std::vector<std::size_t> rows(k);
  std::iota(rows.begin(), rows.end(), 0);
  std::vector<std::pair<double, double>> pos;
  for (const auto & p : points) {
    pos.emplace_back(p.x, p.y);
  }
  DecoderState s;
  s.content = k == config_.modes ? query_ : nn::gather_rows(query_, rows);
  s.intention = intention_mlp_.forward(nn::sinusoidal_encode_rows(pos, config_.d_decoder));
  s.points.assign(points.begin(), points.end());
  s.layer = 0;
  return s;
}

DecoderOutput MotionDecoder::forward_layer(const DecoderState & state, const DecoderInputs & in) const
{
  if (state.layer >= layers_.size()) {
    throw ValidationError("decoder: layer index " + std::to_string(state.layer) + " exceeds the decoder depth; re-encode first");
  }
  require(in.target < in.agents.rows(), "decoder: target row outside the agent context");
  const Layer & layer = layers_[state.layer];
  const std::size_t dd = config_.d_decoder;

  // Query = content + intention embedding + ADV pose embedding + projection of the target's own context row.
  nn::Tensor q = nn::add(state.content, state.intention);
  if (in.adv_pose) {
    auto row = nn::sinusoidal_encode(in.adv_pose->x, in.adv_pose->y, dd);
    row.push_back(std::sin(in.adv_pose->heading));
    row.push_back(std::cos(in.adv_pose->heading));
    q = nn::add_row(q, adv_mlp_.forward(nn::Tensor::from(1, dd + 2, std::move(row))));
  }
  q = nn::add_row(q, self_proj_.forward(nn::gather_rows(in.agents, {in.target})));

  nn::Tensor x = layer.norm1.forward(nn::add(q, layer.self_attn.forward(q, q, q)));
  x = layer.norm2.forward(nn::add(x, layer.agent_attn.forward(x, in.agents, in.agents)));
  if (in.map.defined()) {
    x = layer.norm3.forward(nn::add(x, layer.map_attn.forward(x, in.map, in.map)));
  }
  x = layer.norm4.forward(nn::add(x, layer.ffn.forward(x)));

  DecoderOutput out;
  out.gmm = gmm_from_raw(layer.head.forward(x), state.points, config_.horizon);
  out.next.content = x;
  out.next.intention = state.intention;
  out.next.points = state.points;
  out.next.layer = state.layer + 1;
  return out;
}
}  // namespace agentsim
