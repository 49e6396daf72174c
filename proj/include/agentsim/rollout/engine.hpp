#ifndef AGENTSIM__ROLLOUT__ENGINE_HPP_
#define AGENTSIM__ROLLOUT__ENGINE_HPP_

#include "agentsim/rollout/policies.hpp"

#include <functional>
#include <optional>

namespace agentsim
{
/// Appends `state` at `timestamp`; throws ValidationError unless timestamp = last + dt.
void aggregate_history(AgentTrack & track, const AgentState & state, double timestamp);

/// Tracks valid at the split (state history_len - 1); the ADV must be among them.
std::vector<std::size_t> simulated_tracks(const Scenario & scenario);

struct RolloutHooks
{
  /// Called for every world-agent prediction before the mode is chosen; may edit it.
  std::function<void(std::size_t step, std::size_t agent, GmmPrediction & pred)> on_prediction;
};

enum class WorldModel
{
  model,
  constant_velocity
};

/// Seed of rollout r under master seed m.
std::uint64_t rollout_seed(std::uint64_t master, std::size_t rollout_index);

/**
 * @brief One closed-loop episode. world agents are driven by `model` (or held at constant velocity),
 * the ADV by `adv_policy`. Agent order follows simulated_tracks().
 */
Rollout run_rollout(const Scenario & scenario, const SimModel * model, AdvPolicy & adv_policy,
  const RolloutConfig & config, std::size_t rollout_index, const RolloutHooks & hooks = {},
  WorldModel world = WorldModel::model);

/// Index into `ensemble_size` models used for rollout r.
std::size_t ensemble_pick(std::uint64_t master, std::size_t rollout_index, std::size_t ensemble_size);

/// config.rollouts episodes; over OpenMP when config.parallel. Output is independent of scheduling.
RolloutSet run_simulation_set(const Scenario & scenario, const std::vector<const SimModel *> & models,
  const AdvPolicy & adv_policy, const RolloutConfig & config, WorldModel world = WorldModel::model);

/// Every agent (ADV included) at constant velocity; the reference baseline.
RolloutSet run_constant_velocity_set(const Scenario & scenario, const RolloutConfig & config);

struct ProbeResult
{
  bool independent = false;                      //!< World agents bit-identical across the two runs.
  std::optional<std::size_t> adv_divergence;    //!< First step where the ADV states differ.
  std::optional<std::size_t> world_divergence;  //!< First step where any world-agent state differs.
};

/// Runs both policies on one rollout index and compares.
ProbeResult compare_policies(const Scenario & scenario, const SimModel & model, const AdvPolicy & a,
  const AdvPolicy & b, const RolloutConfig & config, std::size_t rollout_index = 0);

/// True iff world agents are bit-identical; throws ValidationError if the ADV trajectories differ.
bool conditional_independence_probe(const Scenario & scenario, const SimModel & model, const AdvPolicy & a,
  const AdvPolicy & b, const RolloutConfig & config, std::size_t rollout_index = 0);
}  // namespace agentsim

#endif  // AGENTSIM__ROLLOUT__ENGINE_HPP_
