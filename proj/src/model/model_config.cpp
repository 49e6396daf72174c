#include "agentsim/model/model_config.hpp"

#include "agentsim/error.hpp"

namespace agentsim
{
ModelConfig ModelConfig::from_preset(const std::string & name)
{
  ModelConfig c;
  c.preset = name;
  if (name == "small") {
    return c;
  }
  if (name == "large") {
    c.d_model = 384;
    c.d_decoder = 768;
    return c;
  }
  if (name == "tiny") {
    c.d_model = 64;
    c.d_decoder = 128;
    c.agent_mlp_channels = 64;
    c.map_mlp_channels = 32;
    return c;
  }
  if (name == "micro") {
    c.d_model = 16;
    c.d_decoder = 16;
    c.agent_mlp_layers = 2;
    c.agent_mlp_channels = 16;
    c.map_mlp_layers = 2;
    c.map_mlp_channels = 8;
    c.encoder_layers = 2;
    c.encoder_heads = 2;
    c.neighbors = 4;
    c.decoder_layers = 5;
    c.decoder_heads = 2;
    c.modes = 4;
    c.horizon = 3;
    c.max_polyline_points = 5;
    c.max_map_tokens = 6;
    return c;
  }
  throw ValidationError("unknown model preset '" + name + "' (small, large, tiny, micro)");
}

void ModelConfig::validate() const
{
  auto in_range = [](std::size_t v, std::size_t lo, std::size_t hi, const char * name) {
    if (v < lo || v > hi) {
      throw ValidationError(
        std::string("model.") + name + " = " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
        std::to_string(hi) + "]");
    }
  };
  in_range(d_model, 2, 1024, "d_model");
  in_range(d_decoder, 2, 2048, "d_decoder");
  in_range(agent_mlp_layers, 1, 8, "agent_mlp_layers");
  in_range(agent_mlp_channels, 1, 1024, "agent_mlp_channels");
  in_range(map_mlp_layers, 1, 8, "map_mlp_layers");
  in_range(map_mlp_channels, 1, 1024, "map_mlp_channels");
  in_range(encoder_layers, 1, 12, "encoder_layers");
  in_range(encoder_heads, 1, 16, "encoder_heads");
  in_range(neighbors, 1, 1024, "neighbors");
  in_range(decoder_layers, 1, 10, "decoder_layers");
  in_range(decoder_heads, 1, 16, "decoder_heads");
  in_range(modes, 1, 64, "modes");
  in_range(horizon, 1, 10, "horizon");
  in_range(ffn_multiplier, 1, 8, "ffn_multiplier");
  in_range(max_polyline_points, 2, 100, "max_polyline_points");
  in_range(max_map_tokens, 1, 512, "max_map_tokens");
  if (d_model % 2 != 0 || d_decoder % 2 != 0) {
    throw ValidationError("model widths must be even (sinusoidal embeddings)");
  }
  if (d_model % encoder_heads != 0) {
    throw ValidationError("d_model must be divisible by encoder_heads");
  }
  if (d_decoder % decoder_heads != 0 || d_model % decoder_heads != 0) {
    throw ValidationError("d_decoder and d_model must be divisible by decoder_heads");
  }
}

nlohmann::json ModelConfig::to_json() const
{
  return {{"preset", preset}, {"d_model", d_model}, {"d_decoder", d_decoder}, {"agent_mlp_layers", agent_mlp_layers},
    {"agent_mlp_channels", agent_mlp_channels}, {"map_mlp_layers", map_mlp_layers},
    {"map_mlp_channels", map_mlp_channels}, {"encoder_layers", encoder_layers}, {"encoder_heads", encoder_heads},
    {"neighbors", neighbors}, {"decoder_layers", decoder_layers}, {"decoder_heads", decoder_heads}, {"modes", modes},
    {"horizon", horizon}, {"ffn_multiplier", ffn_multiplier}, {"max_polyline_points", max_polyline_points},
    {"max_map_tokens", max_map_tokens}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json & j)
{
  if (!j.is_object()) {
    throw ValidationError("model config must be an object");
  }
  ModelConfig c = from_preset(j.value("preset", std::string("small")));
  const nlohmann::json defaults = c.to_json();
  for (const auto & [key, value] : j.items()) {
    if (!defaults.contains(key)) {
      throw ValidationError("unknown model config key '" + key + "'");
    }
    if (key == "preset") {
      continue;
    }
    if (!value.is_number_unsigned()) {
      throw ValidationError("model." + key + " must be a non-negative integer");
    }
  }
  auto get = [&](const char * key, std::size_t & field) {
    if (j.contains(key)) {
      field = j.at(key).get<std::size_t>();
    }
  };
  get("d_model", c.d_model);
  get("d_decoder", c.d_decoder);
  get("agent_mlp_layers", c.agent_mlp_layers);
  get("agent_mlp_channels", c.agent_mlp_channels);
  get("map_mlp_layers", c.map_mlp_layers);
  get("map_mlp_channels", c.map_mlp_channels);
  get("encoder_layers", c.encoder_layers);
  get("encoder_heads", c.encoder_heads);
  get("neighbors", c.neighbors);
  get("decoder_layers", c.decoder_layers);
  get("decoder_heads", c.decoder_heads);
  get("modes", c.modes);
  get("horizon", c.horizon);
  get("ffn_multiplier", c.ffn_multiplier);
  get("max_polyline_points", c.max_polyline_points);
  get("max_map_tokens", c.max_map_tokens);
  c.validate();
  return c;
}
}  // namespace agentsim
