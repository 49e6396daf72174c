#ifndef AGENTSIM__MODEL__MODEL_CONFIG_HPP_
#define AGENTSIM__MODEL__MODEL_CONFIG_HPP_

#include <json.hpp>

#include <cstddef>
#include <string>

namespace agentsim
{
/**
 * @brief Architecture hyperparameters.
 *
 * Layer counts, heads and mode count follow the reference architecture in every
 * preset; presets only change widths. "small" and "large" are the two published
 * width options, "tiny" and "micro" are scaled down for single-core training runs
 * and gradient checks.
 */
struct ModelConfig
{
  std::string preset = "small";
  std::size_t d_model = 256;    //!< Agent / map token width D.
  std::size_t d_decoder = 512;  //!< Motion query width.
  std::size_t agent_mlp_layers = 3;
  std::size_t agent_mlp_channels = 256;
  std::size_t map_mlp_layers = 5;
  std::size_t map_mlp_channels = 64;
  std::size_t encoder_layers = 6;
  std::size_t encoder_heads = 8;
  std::size_t neighbors = 16;  //!< K of the local self-attention.
  std::size_t decoder_layers = 10;
  std::size_t decoder_heads = 8;
  std::size_t modes = 64;
  std::size_t horizon = 10;  //!< Predicted steps per layer.
  std::size_t ffn_multiplier = 2;
  std::size_t max_polyline_points = 20;
  std::size_t max_map_tokens = 64;

  static ModelConfig from_preset(const std::string & name);

  /// Throws ValidationError.
  void validate() const;
  nlohmann::json to_json() const;
  /// Starts from the named preset (default "small") and applies the remaining keys; unknown keys throw.
  static ModelConfig from_json(const nlohmann::json & j);
};

inline constexpr std::size_t kAgentFeatureDim = 12;
inline constexpr std::size_t kMapFeatureDim = 8;
inline constexpr double kPositionScale = 0.1;  //!< Input positions and velocities are multiplied by this.
inline constexpr double kExtentScale = 0.2;
inline constexpr double kVelocityOutputScale = 10.0;
}  // namespace agentsim

#endif  // AGENTSIM__MODEL__MODEL_CONFIG_HPP_
