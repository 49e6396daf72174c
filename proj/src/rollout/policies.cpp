#include "agentsim/rollout/policies.hpp"

#include "agentsim/error.hpp"
#include "agentsim/nn/tensor.hpp"

#include <cmath>

namespace agentsim
{
void RolloutConfig::validate(std::size_t decoder_layers) const
{
  if (steps < 1 || steps > kFutureSteps) {
    throw ValidationError("rollout.steps must lie in [1, 80]");
  }
  if (std::abs(dt - kDt) > 1e-12) {
    throw ValidationError("rollout.dt must be 0.1");
  }
  if (reencode_period < 1 || reencode_period > decoder_layers) {
    throw ValidationError(
      "rollout.reencode_period must lie in [1, " + std::to_string(decoder_layers) + "] (decoder depth)");
  }
  if (rollouts < 1) {
    throw ValidationError("rollout.rollouts must be positive");
  }
  sampling.validate();
}

nlohmann::json RolloutConfig::to_json() const
{
  return {{"steps", steps}, {"dt", dt}, {"reencode_period", reencode_period},
    {"sampling", {{"mode", std::string(to_string(sampling.mode))}, {"k", sampling.k}, {"period", sampling.period}}},
    {"seed", seed}, {"rollouts", rollouts}, {"parallel", parallel}};
}

RolloutConfig RolloutConfig::from_json(const nlohmann::json & j)
{
  RolloutConfig c;
  for (const auto & [key, value] : j.items()) {
    if (key == "steps") {
      c.steps = value.get<std::size_t>();
    } else if (key == "dt") {
      c.dt = value.get<double>();
    } else if (key == "reencode_period") {
      c.reencode_period = value.get<std::size_t>();
    } else if (key == "seed") {
      c.seed = value.get<std::uint64_t>();
    } else if (key == "rollouts") {
      c.rollouts = value.get<std::size_t>();
    } else if (key == "parallel") {
      c.parallel = value.get<bool>();
    } else if (key == "sampling") {
      for (const auto & [sk, sv] : value.items()) {
        if (sk == "mode") {
          c.sampling.mode = parse_sampling_mode(sv.get<std::string>());
        } else if (sk == "k") {
          c.sampling.k = sv.get<std::size_t>();
        } else if (sk == "period") {
          c.sampling.period = sv.get<std::size_t>();
        } else {
          throw ValidationError("unknown rollout.sampling key '" + sk + "'");
        }
      }
    } else {
      throw ValidationError("unknown rollout key '" + key + "'");
    }
  }
  return c;
}

AgentState LogReplayPolicy::next_state(const SimulationView & view, Rng &)
{
  const AgentTrack & track = view.scenario->tracks[(*view.track_of)[view.adv]];
  const std::size_t index = track.history_len + view.step;
  if (index >= track.states.size() || !track.states[index].valid) {
    throw Error("log-replay: no logged ADV state for step " + std::to_string(view.step));
  }
  return track.states[index];
}

AgentState ScriptedPolicy::next_state(const SimulationView & view, Rng &)
{
  if (view.step >= states_.size()) {
    throw Error("scripted policy: no state for step " + std::to_string(view.step));
  }
  return states_[view.step];
}

AgentState constant_velocity_step(const AgentState & s, double dt)
{
  AgentState next = s;
  next.x += s.vx * dt;
  next.y += s.vy * dt;
  return next;
}

AgentState ConstantVelocityPolicy::next_state(const SimulationView & view, Rng &)
{
  return constant_velocity_step((*view.histories)[view.adv].states.back(), view.config->dt);
}

ModelDriver::ModelDriver(const SimModel & model, std::size_t agent) : model_(&model), agent_(agent) {}

GmmPrediction ModelDriver::predict(const std::vector<AgentTrack> & histories,
  const std::vector<MapToken> & map, std::size_t step, std::size_t reencode_period, const AgentState * adv_next)
{
  const nn::NoGradGuard no_grad;
  if (step % reencode_period == 0) {
    std::vector<std::span<const AgentState>> spans;
    spans.reserve(histories.size());
    for (const auto & h : histories) {
      spans.emplace_back(h.states);
    }
    ctx_ = model_->encoder().encode(spans, map, agent_, step);
    state_ = model_->decoder().initial_state(model_->intention_points(histories[agent_].states.back().category));
  }
  std::vector<AgentState> current;
  current.reserve(histories.size());
  for (const auto & h : histories) {
    current.push_back(h.states.back());
  }
  DecoderInputs in;
  in.agents = model_->encoder().update_agent_context(ctx_, current);
  in.map = ctx_.M;
  in.target = agent_;
  if (adv_next != nullptr) {
    const Vec2 p = ctx_.frame.to_local(adv_next->position());
    in.adv_pose = Pose2{p.x, p.y, ctx_.frame.heading_to_local(adv_next->heading)};
  }
  DecoderOutput out = model_->decoder().forward_layer(state_, in);
  state_ = std::move(out.next);
  return to_prediction(out.gmm);
}

AgentState ModelAdvPolicy::next_state(const SimulationView & view, Rng & rng)
{
  if (view.model == nullptr) {
    throw ValidationError("model ADV policy needs a model");
  }
  if (!driver_) {
    driver_.emplace(*view.model, view.adv);
  }
  const GmmPrediction pred =
    driver_->predict(*view.histories, *view.map, view.step, view.config->reencode_period, nullptr);
  return receding_horizon_step(pred, sample_mode(pred, view.config->sampling, view.step, rng), (*view.histories)[view.adv].states.back());
}

std::unique_ptr<AdvPolicy> make_adv_policy(std::string_view name)
{
  if (name == "model") {
    return std::make_unique<ModelAdvPolicy>();
  }
  if (name == "log-replay") {
    return std::make_unique<LogReplayPolicy>();
  }
  if (name == "constant-velocity") {
    return std::make_unique<ConstantVelocityPolicy>();
  }
  throw ValidationError("unknown policy '" + std::string(name) + "' (model, log-replay, constant-velocity)");
}

AgentState receding_horizon_step(const GmmPrediction & pred, std::size_t mode, const AgentState & current)
{
  require(mode < pred.modes.size(), "receding_horizon_step: mode index out of range");
  const GmmMode & m = pred.modes[mode];
  require(!m.steps.empty(), "receding_horizon_step: empty horizon");
  const GaussianStep & g = m.steps.front();
  const double n = std::hypot(m.sin_heading, m.cos_heading);
  if (!std::isfinite(g.mu_x) || !std::isfinite(g.mu_y) || !std::isfinite(n) || !std::isfinite(m.vx) ||
      !std::isfinite(m.vy)) {
    throw NumericError("receding_horizon_step: non-finite prediction");
  }
  const Frame frame(pose_of(current));
  const Vec2 p = frame.to_global(Vec2{g.mu_x, g.mu_y});
  const double local_heading = n > 0.0 ? std::atan2(m.sin_heading / n, m.cos_heading / n) : 0.0;
  const Vec2 v = frame.rotate_to_global({m.vx, m.vy});
  return make_state(p.x, p.y, current.z, frame.heading_to_global(local_heading), v.x, v.y, current.length,
    current.width, current.category, true);
}
}  // namespace agentsim
