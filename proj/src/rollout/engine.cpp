#include "agentsim/rollout/engine.hpp"

#include "agentsim/error.hpp"
#include "agentsim/nn/tensor.hpp"

#include <cmath>
#include <exception>

namespace agentsim
{
void aggregate_history(AgentTrack & track, const AgentState & state, double timestamp)
{
  require(!track.states.empty(), "aggregate_history: empty track");
  const double expected = track.timestamp(track.states.size() - 1) + kDt;
  if (std::abs(timestamp - expected) > 1e-6) {
    throw ValidationError("aggregate_history: timestep discontinuity (got " + std::to_string(timestamp) +
                          ", expected " + std::to_string(expected) + ")");
  }
  track.states.push_back(state);
}

std::vector<std::size_t> simulated_tracks(const Scenario & scenario)
{
  std::vector<std::size_t> out;
  const std::size_t adv = scenario.adv_index();
  bool adv_in = false;
  for (std::size_t i = 0; i < scenario.tracks.size(); ++i) {
    const AgentTrack & t = scenario.tracks[i];
    if (t.history_len >= 2 && t.history_len <= t.states.size() && t.states[t.history_len - 1].valid) {
      out.push_back(i);
      adv_in = adv_in || i == adv;
    }
  }
  if (!adv_in) {
    throw ValidationError("ADV is not valid at the split point");
  }
  return out;
}

std::uint64_t rollout_seed(std::uint64_t master, std::size_t rollout_index)
{
  return hash_combine(master, rollout_index);
}

namespace
{
void check_finite(const AgentState & s, const std::string & who)
{
  if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.heading) || !std::isfinite(s.vx) ||
      !std::isfinite(s.vy)) {
    throw NumericError("non-finite state produced for " + who);
  }
}
}  // namespace

Rollout run_rollout(const Scenario & scenario, const SimModel * model, AdvPolicy & adv_policy,
  const RolloutConfig & config, std::size_t rollout_index, const RolloutHooks & hooks, WorldModel world)
{
  const nn::NoGradGuard no_grad;
  if (world == WorldModel::model && model == nullptr) {
    throw ValidationError("run_rollout: world agents need a model");
  }
  config.validate(model != nullptr ? model->config().decoder_layers : 10);

  const std::vector<std::size_t> track_of = simulated_tracks(scenario);
  const std::size_t n = track_of.size();
  const std::size_t adv_track = scenario.adv_index();
  std::size_t adv = 0;
  std::vector<AgentTrack> histories(n);
  std::vector<std::uint64_t> id_hash(n);
  for (std::size_t a = 0; a < n; ++a) {
    const AgentTrack & src = scenario.tracks[track_of[a]];
    histories[a].agent_id = src.agent_id;
    histories[a].start_step = src.start_step;
    histories[a].history_len = src.history_len;
    histories[a].states.assign(src.states.begin(), src.states.begin() + static_cast<std::ptrdiff_t>(src.history_len));
    id_hash[a] = hash_string(src.agent_id);
    if (track_of[a] == adv_track) {
      adv = a;
    }
  }

  std::vector<MapToken> map;
  if (model != nullptr) {
    map = tokenize_map(scenario.polylines, model->config().max_polyline_points);
  }
  std::vector<std::optional<ModelDriver>> drivers(n);
  if (world == WorldModel::model) {
    for (std::size_t a = 0; a < n; ++a) {
      if (a != adv) {
        drivers[a].emplace(*model, a);
      }
    }
  }

  Rollout out;
  out.seed = rollout_seed(config.seed, rollout_index);
  out.model_fingerprint = model != nullptr ? model->fingerprint() : std::string("none");
  out.agents.assign(n, {});

  SimulationView view;
  view.scenario = &scenario;
  view.model = model;
  view.map = &map;
  view.histories = &histories;
  view.track_of = &track_of;
  view.adv = adv;
  view.config = &config;

  std::vector<AgentState> next(n);
  for (std::size_t t = 0; t < config.steps; ++t) {
    view.step = t;
    Rng adv_rng = Rng::stream(out.seed, {id_hash[adv], t});
    next[adv] = adv_policy.next_state(view, adv_rng);
    check_finite(next[adv], "ADV");

    for (std::size_t a = 0; a < n; ++a) {
      if (a == adv) {
        continue;
      }
      const AgentState & current = histories[a].states.back();
      if (world == WorldModel::constant_velocity) {
        next[a] = constant_velocity_step(current, config.dt);
        continue;
      }
      GmmPrediction pred = drivers[a]->predict(histories, map, t, config.reencode_period, &next[adv]);
      if (hooks.on_prediction) {
        hooks.on_prediction(t, a, pred);
      }
      Rng rng = Rng::stream(out.seed, {id_hash[a], t});
      next[a] = receding_horizon_step(pred, sample_mode(pred, config.sampling, t, rng), current);
      check_finite(next[a], histories[a].agent_id);
    }

    for (std::size_t a = 0; a < n; ++a) {
      AgentTrack & h = histories[a];
      aggregate_history(h, next[a], h.timestamp(h.states.size()));
      out.agents[a].push_back(next[a]);
    }
  }
  return out;
}

std::size_t ensemble_pick(std::uint64_t master, std::size_t rollout_index, std::size_t ensemble_size)
{
  require(ensemble_size > 0, "empty ensemble");
  if (ensemble_size == 1) {
    return 0;
  }
  return static_cast<std::size_t>(
    Rng::stream(master, {hash_string("ensemble"), rollout_index}).below(ensemble_size));
}

RolloutSet run_simulation_set(const Scenario & scenario, const std::vector<const SimModel *> & models,
  const AdvPolicy & adv_policy, const RolloutConfig & config, WorldModel world)
{
  if (world == WorldModel::model && models.empty()) {
    throw ValidationError("run_simulation_set: empty ensemble list");
  }
  for (const SimModel * m : models) {
    require(m != nullptr, "run_simulation_set: null model");
  }
  config.validate(models.empty() ? 10 : models.front()->config().decoder_layers);

  RolloutSet set;
  set.scenario_id = scenario.scenario_id;
  set.master_seed = config.seed;
  for (std::size_t i : simulated_tracks(scenario)) {
    set.agent_ids.push_back(scenario.tracks[i].agent_id);
  }
  set.rollouts.resize(config.rollouts);
  std::vector<std::exception_ptr> errors(config.rollouts);

  const auto one = [&](std::size_t r) {
    try {
      const SimModel * m = models.empty() ? nullptr : models[ensemble_pick(config.seed, r, models.size())];
      std::unique_ptr<AdvPolicy> policy = adv_policy.fork();
      set.rollouts[r] = run_rollout(scenario, m, *policy, config, r, {}, world);
    } catch (...) {
      errors[r] = std::current_exception();
    }
  };
  const auto count = static_cast<std::ptrdiff_t>(config.rollouts);
  if (config.parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t r = 0; r < count; ++r) {
      one(static_cast<std::size_t>(r));
    }
  } else {
    for (std::ptrdiff_t r = 0; r < count; ++r) {
      one(static_cast<std::size_t>(r));
    }
  }
  for (const auto & e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }

  if (models.size() == 1) {
    set.model_fingerprint = models.front()->fingerprint();
  } else if (models.empty()) {
    set.model_fingerprint = "none";
  } else {
    std::string joined = "ensemble";
    for (const SimModel * m : models) {
      joined += ":" + m->fingerprint();
    }
    set.model_fingerprint = joined;
  }
  return set;
}

RolloutSet run_constant_velocity_set(const Scenario & scenario, const RolloutConfig & config)
{
  return run_simulation_set(scenario, {}, ConstantVelocityPolicy{}, config, WorldModel::constant_velocity);
}

ProbeResult compare_policies(const Scenario & scenario, const SimModel & model, const AdvPolicy & a,
  const AdvPolicy & b, const RolloutConfig & config, std::size_t rollout_index)
{
  std::unique_ptr<AdvPolicy> pa = a.fork();
  std::unique_ptr<AdvPolicy> pb = b.fork();
  const Rollout ra = run_rollout(scenario, &model, *pa, config, rollout_index);
  const Rollout rb = run_rollout(scenario, &model, *pb, config, rollout_index);
  const std::size_t adv = [&] {
    const auto tracks = simulated_tracks(scenario);
    const std::size_t adv_track = scenario.adv_index();
    for (std::size_t i = 0; i < tracks.size(); ++i) {
      if (tracks[i] == adv_track) {
        return i;
      }
    }
    return std::size_t{0};
  }();

  ProbeResult res;
  for (std::size_t t = 0; t < config.steps; ++t) {
    if (!res.adv_divergence && !(ra.agents[adv][t] == rb.agents[adv][t])) {
      res.adv_divergence = t;
    }
    if (!res.world_divergence) {
      for (std::size_t i = 0; i < ra.agents.size(); ++i) {
        if (i != adv && !(ra.agents[i][t] == rb.agents[i][t])) {
          res.world_divergence = t;
          break;
        }
      }
    }
  }
  res.independent = !res.world_divergence.has_value();
  return res;
}

bool conditional_independence_probe(const Scenario & scenario, const SimModel & model, const AdvPolicy & a,
  const AdvPolicy & b, const RolloutConfig & config, std::size_t rollout_index)
{
  const ProbeResult res = compare_policies(scenario, model, a, b, config, rollout_index);
  if (res.adv_divergence) {
    throw ValidationError(
      "probe inapplicable: ADV policies disagree at step " + std::to_string(*res.adv_divergence));
  }
  return res.independent;
}
}  // namespace agentsim
