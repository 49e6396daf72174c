#ifndef AGENTSIM__MODEL__SIM_MODEL_HPP_
#define AGENTSIM__MODEL__SIM_MODEL_HPP_

#include "agentsim/decoder/intention_points.hpp"
#include "agentsim/decoder/motion_decoder.hpp"
#include "agentsim/encoder/scene_encoder.hpp"
#include "agentsim/nn/checkpoint.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace agentsim
{
/// Encoder + decoder parameters with per-category intention points.
class SimModel
{
public:
  explicit SimModel(const ModelConfig & config, std::uint64_t init_seed = 0);
  SimModel(SimModel &&) = default;
  SimModel & operator=(SimModel &&) = default;
  SimModel(const SimModel &) = delete;
  SimModel & operator=(const SimModel &) = delete;

  const ModelConfig & config() const noexcept { return config_; }
  nn::ParamStore & params() noexcept { return store_; }
  const nn::ParamStore & params() const noexcept { return store_; }
  const SceneEncoder & encoder() const noexcept { return encoder_; }
  const MotionDecoder & decoder() const noexcept { return decoder_; }

  /// Keeps at most config.modes points.
  void set_intention_points(const IntentionPointSet & set);
  bool has_intention_points(AgentCategory c) const { return intentions_.count(c) != 0; }
  /// Throws ValidationError for a category without a fitted table.
  const std::vector<Vec2> & intention_points(AgentCategory c) const;
  const std::map<AgentCategory, IntentionPointSet> & intention_tables() const noexcept { return intentions_; }

  /// Hash of the architecture, intention tables and parameter values.
  std::string fingerprint() const;

  /// Optimizer moments are included when include_optimizer is set; `training` is stored verbatim.
  nn::Checkpoint to_checkpoint(bool include_optimizer = false, const nlohmann::json & training = {}) const;
  static SimModel from_checkpoint(const nn::Checkpoint & ckpt);

  void save(const std::filesystem::path & path, bool include_optimizer = false, const nlohmann::json & training = {}) const;
  static SimModel load(const std::filesystem::path & path);

private:
  std::vector<nn::NamedArray> model_arrays() const;

  ModelConfig config_;
  nn::ParamStore store_;
  SceneEncoder encoder_;
  MotionDecoder decoder_;
  std::map<AgentCategory, IntentionPointSet> intentions_;
};
}  // namespace agentsim

#endif  // AGENTSIM__MODEL__SIM_MODEL_HPP_
