#include "agentsim/error.hpp"
#include "agentsim/rollout/engine.hpp"
#include "agentsim/scenario/io.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace agentsim;
using agentsim::testing::micro_model;
using agentsim::testing::vehicle_corpus;

namespace
{
GmmPrediction probs(std::vector<double> p)
{
  GmmPrediction g;
  for (double v : p) {
    GmmMode m;
    m.prob = v;
    m.steps.resize(10);
    g.modes.push_back(m);
  }
  return g;
}

RolloutConfig short_config(std::size_t steps, std::uint64_t seed = 3)
{
  RolloutConfig c;
  c.steps = steps;
  c.reencode_period = 3;
  c.seed = seed;
  c.rollouts = 4;
  return c;
}

std::vector<AgentState> logged_adv(const Scenario & s)
{
  const AgentTrack & t = s.tracks[s.adv_index()];
  return {t.states.begin() + static_cast<std::ptrdiff_t>(t.history_len), t.states.end()};
}
}  // namespace

TEST_CASE("sample_mode")
{
  const GmmPrediction p = probs({0.2, 0.7, 0.1});
  Rng rng(1);
  SamplingPolicy ml;
  ml.mode = SamplingMode::max_likelihood;
  CHECK(sample_mode(probs({0.7, 0.2, 0.1}), ml, 0, rng) == 0);
  CHECK(sample_mode(p, ml, 0, rng) == 1);
  CHECK(argmax_mode(probs({0.4, 0.4, 0.2})) == 0);
  CHECK(top_k_modes(probs({0.1, 0.3, 0.3, 0.3}), 2) == std::vector<std::size_t>{1, 2});

  // Frequencies of scheduled top-3 draws.
  const GmmPrediction q = probs({0.3, 0.0, 0.5, 0.0, 0.2, 0.0});
  SamplingPolicy tk;
  tk.k = 3;
  tk.period = 5;
  const std::size_t n = 100000;
  std::vector<std::size_t> count(6, 0);
  for (std::size_t i = 0; i < n; ++i) {
    ++count[sample_mode(q, tk, 10, rng)];
  }
  for (std::size_t m : {std::size_t{0}, std::size_t{2}, std::size_t{4}}) {
    const double pm = q.modes[m].prob;
    const double sd = std::sqrt(n * pm * (1 - pm));
    CHECK(std::abs(static_cast<double>(count[m]) - n * pm) < 3 * sd);
  }
  CHECK(count[1] + count[3] + count[5] == 0);

  // Off schedule falls back to argmax; k = 1 is max likelihood everywhere.
  CHECK(sample_mode(q, tk, 11, rng) == 2);
  SamplingPolicy k1 = tk;
  k1.k = 1;
  for (std::size_t step = 0; step < 30; ++step) {
    CHECK(sample_mode(q, k1, step, rng) == sample_mode(q, ml, step, rng));
  }

  SamplingPolicy bad;
  bad.k = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad.k = 65;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad.k = 3;
  bad.period = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("receding_horizon_step uses only the first waypoint")
{
  GmmPrediction p = probs({1.0});
  p.modes[0].steps[0].mu_x = 1.0;
  p.modes[0].steps[0].mu_y = 0.0;
  p.modes[0].sin_heading = 0.0;
  p.modes[0].cos_heading = 3.0;
  const AgentState cur = make_state(5, 5, 0.7, 0, 10, 0, 4.5, 2.0, AgentCategory::vehicle);
  AgentState next = receding_horizon_step(p, 0, cur);
  CHECK(next.x == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(next.y == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(next.z == cur.z);
  CHECK(next.length == cur.length);
  CHECK(next.heading == 0.0);

  p.modes[0].sin_heading = 2.0;
  p.modes[0].cos_heading = 0.0;
  p.modes[0].vx = 1.0;
  CHECK(receding_horizon_step(p, 0, cur).heading == doctest::Approx(std::numbers::pi / 2));

  // Rotated frame: forward motion follows the current heading.
  const AgentState north = make_state(0, 0, 0, std::numbers::pi / 2, 0, 1, 4, 2, AgentCategory::vehicle);
  next = receding_horizon_step(p, 0, north);
  CHECK(std::abs(next.x) < 1e-12);
  CHECK(next.y == doctest::Approx(1.0));
  CHECK(next.vy == doctest::Approx(1.0));

  GmmPrediction q = p;
  for (std::size_t h = 1; h < 10; ++h) {
    q.modes[0].steps[h] = GaussianStep{99.0 * h, -7.0, 4.0, 0.01, -0.9};
  }
  CHECK(receding_horizon_step(q, 0, cur) == receding_horizon_step(p, 0, cur));

  p.modes[0].steps[0].mu_x = std::nan("");
  CHECK_THROWS_AS(receding_horizon_step(p, 0, cur), NumericError);
}

TEST_CASE("perturbing later horizon steps never changes a simulated state")
{
  const Scenario s = vehicle_corpus(1, 3, 21)[0];
  const SimModel m = micro_model(5);
  RolloutConfig cfg = short_config(kFutureSteps);
  LogReplayPolicy adv;
  const Rollout base = run_rollout(s, &m, adv, cfg, 0);
  REQUIRE(base.agents.size() == 3);
  Rng noise(77);
  for (std::size_t h = 1; h < m.config().horizon; ++h) {
    for (std::size_t field = 0; field < 5; ++field) {
      RolloutHooks hooks;
      hooks.on_prediction = [&](std::size_t, std::size_t, GmmPrediction & pred) {
        for (auto & mode : pred.modes) {
          GaussianStep & g = mode.steps[h];
          const double d = noise.uniform(-3, 3);
          switch (field) {
            case 0: g.mu_x += d; break;
            case 1: g.mu_y += d; break;
            case 2: g.sigma_x *= std::exp(d); break;
            case 3: g.sigma_y *= std::exp(d); break;
            default: g.rho = 0.9 * std::tanh(d); break;
          }
        }
      };
      LogReplayPolicy a2;
      const Rollout pert = run_rollout(s, &m, a2, cfg, 0, hooks);
      CHECK(pert.agents == base.agents);
    }
  }

  // Sanity: the first step does matter.
  RolloutHooks first;
  first.on_prediction = [](std::size_t, std::size_t, GmmPrediction & pred) {
    for (auto & mode : pred.modes) {
      mode.steps[0].mu_x += 0.5;
    }
  };
  LogReplayPolicy a3;
  CHECK(run_rollout(s, &m, a3, cfg, 0, first).agents != base.agents);
}

TEST_CASE("aggregate_history")
{
  const Scenario s = vehicle_corpus(1, 3, 4)[0];
  const AgentTrack & src = s.tracks[0];
  AgentTrack h = src;
  h.states.resize(h.history_len);
  for (std::size_t i = h.history_len; i < src.states.size(); ++i) {
    aggregate_history(h, src.states[i], h.timestamp(h.states.size()));
  }
  CHECK(h.states.size() == 91);
  CHECK(h.states == src.states);
  CHECK_THROWS_AS(aggregate_history(h, src.states.back(), h.timestamp(h.states.size()) + kDt), ValidationError);

  // Encoding the aggregate equals encoding the concatenation.
  const SimModel m = micro_model(8);
  AgentTrack g = src;
  g.states.resize(11);
  for (std::size_t i = 11; i < 20; ++i) {
    aggregate_history(g, src.states[i], g.timestamp(g.states.size()));
  }
  const std::vector<AgentState> cat(src.states.begin(), src.states.begin() + 20);
  const auto map = tokenize_map(s.polylines, m.config().max_polyline_points);
  const std::vector<std::span<const AgentState>> a{g.states}, b{cat};
  const SceneContext ca = m.encoder().encode(a, map, 0);
  const SceneContext cb = m.encoder().encode(b, map, 0);
  CHECK(std::equal(ca.A.data().begin(), ca.A.data().end(), cb.A.data().begin(), cb.A.data().end()));
}

TEST_CASE("rollouts: log replay, determinism, z constancy, seed independence under max likelihood")
{
  const Scenario s = vehicle_corpus(1, 4, 9)[0];
  const SimModel m = micro_model(6);
  const RolloutConfig cfg = short_config(kFutureSteps);
  LogReplayPolicy adv;
  const Rollout r1 = run_rollout(s, &m, adv, cfg, 2);
  const Rollout r2 = run_rollout(s, &m, adv, cfg, 2);
  CHECK(r1.agents == r2.agents);
  CHECK(r1.model_fingerprint == m.fingerprint());

  const auto tracks = simulated_tracks(s);
  for (std::size_t a = 0; a < tracks.size(); ++a) {
    const AgentTrack & t = s.tracks[tracks[a]];
    REQUIRE(r1.agents[a].size() == kFutureSteps);
    if (t.agent_id == s.adv_id) {
      CHECK(r1.agents[a] == logged_adv(s));
    }
    for (const auto & st : r1.agents[a]) {
      CHECK(st.z == t.states[t.history_len - 1].z);
    }
  }

  RolloutConfig ml = cfg;
  ml.sampling.mode = SamplingMode::max_likelihood;
  RolloutConfig ml2 = ml;
  ml2.seed = 999;
  CHECK(run_rollout(s, &m, adv, ml, 0).agents == run_rollout(s, &m, adv, ml2, 5).agents);

  RolloutConfig bad = cfg;
  bad.reencode_period = m.config().decoder_layers + 1;
  CHECK_THROWS_AS(run_rollout(s, &m, adv, bad, 0), ValidationError);
  bad = cfg;
  bad.dt = 0.2;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("simulation sets are identical serial and parallel")
{
  const auto corpus = vehicle_corpus(3, 3, 12);
  const SimModel m = micro_model(7);
  RolloutConfig cfg = short_config(20);
  cfg.rollouts = 8;
  LogReplayPolicy adv;
  for (const Scenario & s : corpus) {
    cfg.parallel = true;
    const std::string par = save_rollout_set(run_simulation_set(s, {&m}, adv, cfg));
    cfg.parallel = false;
    const std::string ser = save_rollout_set(run_simulation_set(s, {&m}, adv, cfg));
    CHECK(par == ser);
    const RolloutSet set = load_rollout_set(par, s);
    CHECK(set.rollouts.size() == 8);
    for (const auto & r : set.rollouts) {
      CHECK(r.model_fingerprint == m.fingerprint());
    }
  }
  CHECK_THROWS_AS(run_simulation_set(corpus[0], {}, adv, cfg), ValidationError);
}

TEST_CASE("ensemble members are picked uniformly")
{
  std::array<std::size_t, 3> count{};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    for (std::size_t r = 0; r < 32; ++r) {
      ++count[ensemble_pick(seed, r, 3)];
    }
  }
  const double n = 3200.0;
  const double sd = std::sqrt(n * (1.0 / 3) * (2.0 / 3));
  for (std::size_t c : count) {
    CHECK(std::abs(static_cast<double>(c) - n / 3) < 3 * sd);
  }

  const Scenario s = vehicle_corpus(1, 3, 2)[0];
  const SimModel a = micro_model(1);
  const SimModel b = micro_model(2);
  RolloutConfig cfg = short_config(5);
  cfg.rollouts = 6;
  const RolloutSet set = run_simulation_set(s, {&a, &b}, LogReplayPolicy{}, cfg);
  CHECK(set.model_fingerprint == "ensemble:" + a.fingerprint() + ":" + b.fingerprint());
  for (std::size_t r = 0; r < set.rollouts.size(); ++r) {
    CHECK(set.rollouts[r].model_fingerprint == (ensemble_pick(cfg.seed, r, 2) == 0 ? a : b).fingerprint());
  }
}

TEST_CASE("conditional independence probe and causality")
{
  const Scenario s = vehicle_corpus(1, 3, 30)[0];
  const SimModel m = micro_model(3);
  const RolloutConfig cfg = short_config(kFutureSteps);
  const LogReplayPolicy replay;
  const ScriptedPolicy same(logged_adv(s));
  CHECK(conditional_independence_probe(s, m, replay, same, cfg));
  CHECK(conditional_independence_probe(s, m, replay, replay, cfg));

  std::vector<AgentState> swerve = logged_adv(s);
  for (std::size_t t = 40; t < swerve.size(); ++t) {
    swerve[t].y += 0.5 * static_cast<double>(t - 39);
  }
  const ScriptedPolicy diverging(swerve);
  const ProbeResult pr = compare_policies(s, m, replay, diverging, cfg);
  REQUIRE(pr.adv_divergence.has_value());
  CHECK(*pr.adv_divergence == 40);
  CHECK(!pr.independent);
  REQUIRE(pr.world_divergence.has_value());
  CHECK(*pr.world_divergence >= 40);
  CHECK_THROWS_AS(conditional_independence_probe(s, m, replay, diverging, cfg), ValidationError);
}

TEST_CASE("constant-velocity world and config round trip")
{
  const Scenario s = vehicle_corpus(1, 3, 5)[0];
  RolloutConfig cfg = short_config(kFutureSteps);
  const RolloutSet set = run_constant_velocity_set(s, cfg);
  CHECK(set.model_fingerprint == "none");
  const auto tracks = simulated_tracks(s);
  for (std::size_t a = 0; a < tracks.size(); ++a) {
    const AgentState & last = s.tracks[tracks[a]].states[10];
    const AgentState & end = set.rollouts[0].agents[a].back();
    if (s.tracks[tracks[a]].agent_id != s.adv_id) {
      CHECK(end.x == doctest::Approx(last.x + 8.0 * last.vx).epsilon(1e-9));
    }
  }
  const RolloutConfig back = RolloutConfig::from_json(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());
  auto j = cfg.to_json();
  j["bogus"] = 1;
  CHECK_THROWS_AS(RolloutConfig::from_json(j), ValidationError);
}
