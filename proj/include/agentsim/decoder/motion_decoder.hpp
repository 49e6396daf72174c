#ifndef AGENTSIM__DECODER__MOTION_DECODER_HPP_
#define AGENTSIM__DECODER__MOTION_DECODER_HPP_

#include "agentsim/decoder/gmm.hpp"
#include "agentsim/model/model_config.hpp"
#include "agentsim/nn/layers.hpp"
#include "agentsim/scenario/frame.hpp"

#include <optional>
#include <span>
#include <vector>

namespace agentsim
{
struct DecoderState
{
  nn::Tensor content;       //!< K x D_dec query content.
  nn::Tensor intention;     //!< K x D_dec intention-point embedding (fixed per window).
  std::vector<Vec2> points; //!< The K intention points.
  std::size_t layer = 0;    //!< Next decoder layer to run.
};

struct DecoderInputs
{
  nn::Tensor agents;  //!< Updated agent context, Na x D.
  nn::Tensor map;     //!< Nm x D, may be undefined.
  std::size_t target = 0;
  /// ADV pose in the encode frame; empty when the target is the ADV itself.
  std::optional<Pose2> adv_pose;
};

struct DecoderOutput
{
  GmmTensors gmm;
  DecoderState next;
};

class MotionDecoder
{
public:
  MotionDecoder() = default;
  MotionDecoder(nn::ParamStore & store, const ModelConfig & config, Rng & rng);

  /// Fresh state for one re-encode window; K = points.size() <= config.modes.
  DecoderState initial_state(std::span<const Vec2> points) const;

  /// Runs layer state.layer; throws ValidationError once every layer has been used.
  DecoderOutput forward_layer(const DecoderState & state, const DecoderInputs & inputs) const;

  std::size_t layer_count() const { return layers_.size(); }

private:
  struct Layer
  {
    nn::MultiHeadAttention self_attn;
    nn::LayerNorm norm1;
    nn::MultiHeadAttention agent_attn;
    nn::LayerNorm norm2;
    nn::MultiHeadAttention map_attn;
    nn::LayerNorm norm3;
    nn::Mlp ffn;
    nn::LayerNorm norm4;
    nn::Mlp head;
  };

  ModelConfig config_;
  nn::Tensor query_;  //!< modes x D_dec learnable content.
  nn::Mlp intention_mlp_;
  nn::Mlp adv_mlp_;
  nn::Linear self_proj_;
  std::vector<Layer> layers_;
};
}  // namespace agentsim

#endif  // AGENTSIM__DECODER__MOTION_DECODER_HPP_
