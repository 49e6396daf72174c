#include "agentsim/encoder/scene_encoder.hpp"

#include "agentsim/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace agentsim
{
std::vector<MapToken> tokenize_map(const std::vector<MapPolyline> & polylines, std::size_t max_points)
{
  require(max_points >= 1, "tokenize_map: max_points must be positive");
  std::vector<MapToken> tokens;
  for (const auto & pl : polylines) {
    for (std::size_t begin = 0; begin < pl.points.size(); begin += max_points) {
      const std::size_t end = std::min(begin + max_points, pl.points.size());
      MapToken t;
      t.points.assign(pl.points.begin() + static_cast<std::ptrdiff_t>(begin), pl.points.begin() + static_cast<std::ptrdiff_t>(end));
      t.directions.assign(
        pl.directions.begin() + static_cast<std::ptrdiff_t>(begin), pl.directions.begin() + static_cast<std::ptrdiff_t>(end));
      t.type = pl.type;
      t.anchor = t.points[t.points.size() / 2];
      tokens.push_back(std::move(t));
    }
  }
  return tokens;
}

std::vector<std::size_t> nearest_map_tokens(const std::vector<MapToken> & tokens, const Vec2 & center, std::size_t count)
{
  std::vector<std::size_t> idx(tokens.size());
  std::iota(idx.begin(), idx.end(), 0);
  if (count < idx.size()) {
    std::vector<double> d(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      d[i] = (tokens[i].anchor - center).norm();
    }
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count), idx.end(),
      [&](std::size_t a, std::size_t b) { return d[a] < d[b] || (d[a] == d[b] && a < b); });
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
  }
  return idx;
}

nn::Mask knn_mask(const std::vector<Vec2> & anchors, std::size_t k)
{
  const std::size_t n = anchors.size();
  nn::Mask mask{n, n, std::vector<std::uint8_t>(n * n, 0)};
  std::vector<std::size_t> order(n);
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      d[j] = (anchors[j] - anchors[i]).norm();
    }
    std::iota(order.begin(), order.end(), 0);
    const std::size_t keep = std::min(k, n);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
      [&](std::size_t a, std::size_t b) { return d[a] < d[b] || (d[a] == d[b] && a < b); });
    for (std::size_t r = 0; r < keep; ++r) {
      mask.allowed[i * n + order[r]] = 1;
    }
  }
  return mask;
}

SceneEncoder::SceneEncoder(nn::ParamStore & store, const ModelConfig & config, Rng & rng) : config_(config)
{
  const std::size_t d = config.d_model;
  std::vector<std::size_t> aw{kAgentFeatureDim};
  aw.insert(aw.end(), config.agent_mlp_layers, config.agent_mlp_channels);
  agent_mlp_ = nn::Mlp(store, "encoder.agent_mlp", aw, rng);
  if (config.agent_mlp_channels != d) {
    agent_proj_ = nn::Linear(store, "encoder.agent_proj", config.agent_mlp_channels, d, rng);
    has_agent_proj_ = true;
  }
  std::vector<std::size_t> mw{kMapFeatureDim};
  mw.insert(mw.end(), config.map_mlp_layers, config.map_mlp_channels);
  map_mlp_ = nn::Mlp(store, "encoder.map_mlp", mw, rng);
  map_proj_ = nn::Linear(store, "encoder.map_proj", config.map_mlp_channels, d, rng);
  for (std::size_t l = 0; l < config.encoder_layers; ++l) {
    const std::string p = "encoder.layer" + std::to_string(l);
    Layer layer;
    layer.attn = nn::MultiHeadAttention(store, p + ".attn", d, d, d, d, config.encoder_heads, rng);
    layer.norm1 = nn::LayerNorm(store, p + ".norm1", d, rng);
    layer.ffn = nn::Mlp(store, p + ".ffn", {d, config.ffn_multiplier * d, d}, rng);
    layer.norm2 = nn::LayerNorm(store, p + ".norm2", d, rng);
    layers_.push_back(std::move(layer));
  }
  current_mlp_ = nn::Mlp(store, "encoder.current_mlp", {d + 2, d, d}, rng);
  fusion_mlp_ = nn::Mlp(store, "encoder.fusion_mlp", {2 * d, d, d}, rng);
}

std::vector<double> SceneEncoder::agent_features(const AgentState & s) const
{
  std::vector<double> f(kAgentFeatureDim, 0.0);
  f[0] = s.x * kPositionScale;
  f[1] = s.y * kPositionScale;
  f[2] = std::sin(s.heading);
  f[3] = std::cos(s.heading);
  f[4] = s.vx * kPositionScale;
  f[5] = s.vy * kPositionScale;
  f[6] = s.length * kExtentScale;
  f[7] = s.width * kExtentScale;
  f[8 + static_cast<std::size_t>(s.category)] = 1.0;
  f[11] = s.valid ? 1.0 : 0.0;
  return f;
}

nn::Tensor SceneEncoder::encode_agent_history(
  const std::vector<std::span<const AgentState>> & histories, const Frame & frame) const
{
  require(!histories.empty(), "encode_agent_history: no agents");
  std::vector<double> rows;
  std::vector<std::pair<std::size_t, std::size_t>> segments;
  std::size_t n = 0;
  for (const auto & h : histories) {
    if (h.size() < 2) {
      throw ValidationError("encode_agent_history: every agent needs at least 2 history states");
    }
    const std::size_t begin = n;
    for (const auto & s : h) {
      if (!s.valid) {
        continue;
      }
      const auto f = agent_features(frame.to_local(s));
      rows.insert(rows.end(), f.begin(), f.end());
      ++n;
    }
    require(n > begin, "encode_agent_history: agent without valid history states");
    segments.emplace_back(begin, n);
  }
  nn::Tensor x = nn::Tensor::from(n, kAgentFeatureDim, std::move(rows));
  nn::Tensor pooled = nn::segment_max(agent_mlp_.forward(x), segments);
  return has_agent_proj_ ? agent_proj_.forward(pooled) : pooled;
}

nn::Tensor SceneEncoder::encode_map(const std::vector<const MapToken *> & tokens, const Frame & frame) const
{
  if (tokens.empty()) {
    throw ValidationError("encode_map: empty map");
  }
  std::vector<double> rows;
  std::vector<std::pair<std::size_t, std::size_t>> segments;
  std::size_t n = 0;
  for (const MapToken * t : tokens) {
    const std::size_t begin = n;
    for (std::size_t i = 0; i < t->points.size(); ++i) {
      const Vec2 p = frame.to_local(t->points[i]);
      const Vec2 d = frame.rotate_to_local(t->directions[i]);
      double f[kMapFeatureDim] = {p.x * kPositionScale, p.y * kPositionScale, d.x, d.y, 0.0, 0.0, 0.0, 0.0};
      f[4 + static_cast<std::size_t>(t->type)] = 1.0;
      rows.insert(rows.end(), f, f + kMapFeatureDim);
      ++n;
    }
    segments.emplace_back(begin, n);
  }
  nn::Tensor x = nn::Tensor::from(n, kMapFeatureDim, std::move(rows));
  return map_proj_.forward(nn::segment_max(map_mlp_.forward(x), segments));
}

std::pair<nn::Tensor, nn::Tensor> SceneEncoder::local_self_attention(
  const nn::Tensor & a_past, const nn::Tensor & m_past, const std::vector<Vec2> & anchors) const
{
  const std::size_t na = a_past.rows();
  const std::size_t nm = m_past.defined() ? m_past.rows() : 0;
  require(na + nm >= 1, "local_self_attention: no tokens");
  require(anchors.size() == na + nm, "local_self_attention: one anchor per token required");
  nn::Tensor x = nm > 0 ? nn::concat_rows({a_past, m_past}) : a_past;
  // K >= N is plain dense attention.
  nn::Mask mask;
  const bool masked = config_.neighbors < na + nm;
  if (masked) {
    mask = knn_mask(anchors, config_.neighbors);
  }
  std::vector<std::pair<double, double>> pos;
  for (const auto & a : anchors) {
    pos.emplace_back(a.x, a.y);
  }
  const nn::Tensor pe = nn::sinusoidal_encode_rows(pos, config_.d_model);
  for (const auto & layer : layers_) {
    const nn::Tensor qk = nn::add(x, pe);
    x = layer.norm1.forward(nn::add(x, layer.attn.forward(qk, qk, x, masked ? &mask : nullptr)));
    x = layer.norm2.forward(nn::add(x, layer.ffn.forward(x)));
  }
  std::vector<std::size_t> ai(na);
  std::iota(ai.begin(), ai.end(), 0);
  nn::Tensor a = nn::gather_rows(x, ai);
  nn::Tensor m;
  if (nm > 0) {
    std::vector<std::size_t> mi(nm);
    std::iota(mi.begin(), mi.end(), na);
    m = nn::gather_rows(x, mi);
  }
  return {a, m};
}

SceneContext SceneEncoder::encode(const std::vector<std::span<const AgentState>> & histories,
  const std::vector<MapToken> & map, std::size_t target, std::size_t step) const
{
  require(target < histories.size() && !histories[target].empty(), "encode: bad target index");
  const AgentState & now = histories[target].back();
  if (!now.valid) {
    throw ValidationError("encode: target agent is not valid at the current step");
  }
  SceneContext ctx;
  ctx.frame = Frame(pose_of(now));
  ctx.target = target;
  ctx.encoded_at_step = step;
  const auto selected = nearest_map_tokens(map, now.position(), config_.max_map_tokens);
  std::vector<const MapToken *> tokens;
  std::vector<Vec2> anchors;
  for (const auto & h : histories) {
    anchors.push_back(ctx.frame.to_local(h.back().position()));
  }
  for (std::size_t i : selected) {
    tokens.push_back(&map[i]);
    anchors.push_back(ctx.frame.to_local(map[i].anchor));
  }
  const nn::Tensor a_past = encode_agent_history(histories, ctx.frame);
  const nn::Tensor m_past = tokens.empty() ? nn::Tensor() : encode_map(tokens, ctx.frame);
  std::tie(ctx.A, ctx.M) = local_self_attention(a_past, m_past, anchors);
  return ctx;
}

nn::Tensor SceneEncoder::update_agent_context(const SceneContext & ctx, std::span<const AgentState> current) const
{
  require(current.size() == ctx.A.rows(), "update_agent_context: one current state per agent row required");
  const std::size_t d = config_.d_model;
  std::vector<double> rows;
  rows.reserve(current.size() * (d + 2));
  for (const auto & s : current) {
    const AgentState l = ctx.frame.to_local(s);
    const auto pe = nn::sinusoidal_encode(l.x, l.y, d);
    rows.insert(rows.end(), pe.begin(), pe.end());
    rows.push_back(std::sin(l.heading));
    rows.push_back(std::cos(l.heading));
  }
  const nn::Tensor a_cur = current_mlp_.forward(nn::Tensor::from(current.size(), d + 2, std::move(rows)));
  return fusion_mlp_.forward(nn::concat_cols({ctx.A, a_cur}));
}
}  // namespace agentsim
