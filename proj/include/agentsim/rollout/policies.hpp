#ifndef AGENTSIM__ROLLOUT__POLICIES_HPP_
#define AGENTSIM__ROLLOUT__POLICIES_HPP_

#include "agentsim/model/sim_model.hpp"
#include "agentsim/rollout/sampling.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace agentsim
{
struct RolloutConfig
{
  std::size_t steps = kFutureSteps;
  double dt = kDt;
  std::size_t reencode_period = 5;  //!< E: full re-encode every E steps, context update in between.
  SamplingPolicy sampling;
  std::uint64_t seed = 0;
  std::size_t rollouts = kRolloutCount;
  bool parallel = true;

  /// Throws ValidationError; decoder_layers bounds E.
  void validate(std::size_t decoder_layers = 10) const;
  nlohmann::json to_json() const;
  static RolloutConfig from_json(const nlohmann::json & j);
};

/// Read-only state handed to an ADV policy at step `step` (producing history index history_len + step).
struct SimulationView
{
  const Scenario * scenario = nullptr;
  const SimModel * model = nullptr;  //!< The rollout's model; null for model-free runs.
  const std::vector<MapToken> * map = nullptr;
  const std::vector<AgentTrack> * histories = nullptr;  //!< Aggregated, per simulated agent.
  const std::vector<std::size_t> * track_of = nullptr;               //!< Simulated agent -> scenario track.
  std::size_t adv = 0;                                               //!< Index into histories.
  std::size_t step = 0;
  const RolloutConfig * config = nullptr;
};

/// Swappable ADV controller. fork() yields a fresh instance for each rollout.
class AdvPolicy
{
public:
  virtual ~AdvPolicy() = default;
  virtual std::string name() const = 0;
  virtual AgentState next_state(const SimulationView & view, Rng & rng) = 0;
  virtual std::unique_ptr<AdvPolicy> fork() const = 0;
};

/// Emits the logged ADV states.
class LogReplayPolicy final : public AdvPolicy
{
public:
  std::string name() const override { return "log-replay"; }
  AgentState next_state(const SimulationView & view, Rng & rng) override;
  std::unique_ptr<AdvPolicy> fork() const override { return std::make_unique<LogReplayPolicy>(*this); }
};

/// Emits a fixed state sequence, one per step.
class ScriptedPolicy final : public AdvPolicy
{
public:
  explicit ScriptedPolicy(std::vector<AgentState> states) : states_(std::move(states)) {}
  std::string name() const override { return "scripted"; }
  AgentState next_state(const SimulationView & view, Rng & rng) override;
  std::unique_ptr<AdvPolicy> fork() const override { return std::make_unique<ScriptedPolicy>(*this); }

private:
  std::vector<AgentState> states_;
};

/// Holds velocity and heading of the last state.
class ConstantVelocityPolicy final : public AdvPolicy
{
public:
  std::string name() const override { return "constant-velocity"; }
  AgentState next_state(const SimulationView & view, Rng & rng) override;
  std::unique_ptr<AdvPolicy> fork() const override { return std::make_unique<ConstantVelocityPolicy>(*this); }
};

AgentState constant_velocity_step(const AgentState & current, double dt);

/**
 * @brief Per-agent model state within one rollout: scene context of the current
 * re-encode window and the decoder state.
 */
class ModelDriver
{
public:
  ModelDriver(const SimModel & model, std::size_t agent);

  /// Re-encodes on window boundaries, then runs one decoder layer. adv_next is null for the ADV itself.
  GmmPrediction predict(const std::vector<AgentTrack> & histories, const std::vector<MapToken> & map,
    std::size_t step, std::size_t reencode_period, const AgentState * adv_next);

private:
  const SimModel * model_;
  std::size_t agent_;
  SceneContext ctx_;
  DecoderState state_;
};

/// The ADV driven by the model itself, with a zero ADV embedding.
class ModelAdvPolicy final : public AdvPolicy
{
public:
  std::string name() const override { return "model"; }
  AgentState next_state(const SimulationView & view, Rng & rng) override;
  std::unique_ptr<AdvPolicy> fork() const override { return std::make_unique<ModelAdvPolicy>(); }

private:
  std::optional<ModelDriver> driver_;
};

std::unique_ptr<AdvPolicy> make_adv_policy(std::string_view name);

/// Commits the first horizon step of `mode`: mean position, normalized heading pair, velocity head;
/// extent, category and z are copied from `current`.
AgentState receding_horizon_step(const GmmPrediction & pred, std::size_t mode, const AgentState & current);
}  // namespace agentsim

#endif  // AGENTSIM__ROLLOUT__POLICIES_HPP_
