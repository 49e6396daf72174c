#ifndef AGENTSIM__CLI__RUN_CONFIG_HPP_
#define AGENTSIM__CLI__RUN_CONFIG_HPP_

#include "agentsim/model/model_config.hpp"
#include "agentsim/rollout/policies.hpp"
#include "agentsim/scenario/generator.hpp"
#include "agentsim/training/trainer.hpp"

#include <filesystem>

namespace agentsim
{
/// Every tunable of a run. Paths are flags, not config, so equal configs give equal outputs anywhere.
struct RunConfig
{
  ModelConfig model = ModelConfig::from_preset("small");
  RolloutConfig rollout;
  TrainConfig train;
  GeneratorConfig generator;
  std::size_t intention_k = 64;
  std::uint64_t intention_seed = 0;
  std::uint64_t data_seed = 0;  //!< gen-data corpus seed.
  std::uint64_t init_seed = 0;  //!< Model parameter initialization.

  /// Throws ValidationError.
  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep defaults; unknown keys throw ValidationError.
  static RunConfig from_json(const nlohmann::json & j);
  static RunConfig load(const std::filesystem::path & path);
};

nlohmann::json generator_to_json(const GeneratorConfig & g);
GeneratorConfig generator_from_json(const nlohmann::json & j);
}  // namespace agentsim

#endif  // AGENTSIM__CLI__RUN_CONFIG_HPP_
