#ifndef AGENTSIM__ENCODER__SCENE_ENCODER_HPP_
#define AGENTSIM__ENCODER__SCENE_ENCODER_HPP_

#include "agentsim/model/model_config.hpp"
#include "agentsim/nn/layers.hpp"
#include "agentsim/scenario/frame.hpp"

#include <span>
#include <vector>

namespace agentsim
{
/// A chunk of at most max_polyline_points consecutive points of one polyline, in global coordinates.
struct MapToken
{
  std::vector<Vec2> points;
  std::vector<Vec2> directions;
  PolylineType type = PolylineType::lane_center;
  Vec2 anchor;  //!< Middle point of the chunk.
};

/// Hard, non-overlapping chunks in polyline order.
std::vector<MapToken> tokenize_map(const std::vector<MapPolyline> & polylines, std::size_t max_points);

/// Indices of the `count` tokens whose anchors are nearest to `center` (ties to lower index), ascending.
std::vector<std::size_t> nearest_map_tokens(const std::vector<MapToken> & tokens, const Vec2 & center, std::size_t count);

/// Row i may attend to its k nearest anchors (itself included, ties to lower index).
nn::Mask knn_mask(const std::vector<Vec2> & anchors, std::size_t k);

struct SceneContext
{
  nn::Tensor A;  //!< Na x D
  nn::Tensor M;  //!< Nm x D
  Frame frame;   //!< Target pose at encode time; every feature is expressed in it.
  std::size_t target = 0;
  std::size_t encoded_at_step = 0;
};

class SceneEncoder
{
public:
  SceneEncoder() = default;
  SceneEncoder(nn::ParamStore & store, const ModelConfig & config, Rng & rng);

  /// histories[a]: time-ordered global states ending at the current time.
  nn::Tensor encode_agent_history(const std::vector<std::span<const AgentState>> & histories, const Frame & frame) const;
  nn::Tensor encode_map(const std::vector<const MapToken *> & tokens, const Frame & frame) const;
  /// Encoder stack over [A; M] with kNN masking by anchor distance; returns (A, M).
  std::pair<nn::Tensor, nn::Tensor> local_self_attention(
    const nn::Tensor & a_past, const nn::Tensor & m_past, const std::vector<Vec2> & anchors) const;

  /// Full encode in the frame of histories[target].back(); map tokens are selected near the target.
  SceneContext encode(const std::vector<std::span<const AgentState>> & histories, const std::vector<MapToken> & map,
    std::size_t target, std::size_t step = 0) const;

  /// A = fusion([ctx.A, current-pose embedding]); current has one global state per agent.
  nn::Tensor update_agent_context(const SceneContext & ctx, std::span<const AgentState> current) const;

  std::vector<double> agent_features(const AgentState & local_state) const;

private:
  struct Layer
  {
    nn::MultiHeadAttention attn;
    nn::LayerNorm norm1;
    nn::Mlp ffn;
    nn::LayerNorm norm2;
  };

  ModelConfig config_;
  nn::Mlp agent_mlp_;
  nn::Linear agent_proj_;
  bool has_agent_proj_ = false;
  nn::Mlp map_mlp_;
  nn::Linear map_proj_;
  std::vector<Layer> layers_;
  nn::Mlp current_mlp_;
  nn::Mlp fusion_mlp_;
};
}  // namespace agentsim

#endif  // AGENTSIM__ENCODER__SCENE_ENCODER_HPP_
