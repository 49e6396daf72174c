// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "agentsim/cli/dispatch.hpp"
#include "agentsim/decoder/intention_points.hpp"
#include "agentsim/error.hpp"
#include "agentsim/metrics/features.hpp"
#include "agentsim/metrics/geometry.hpp"
#include "agentsim/metrics/scoring.hpp"
#include "agentsim/nn/grad_check.hpp"
#include "agentsim/nn/layers.hpp"
#include "agentsim/rollout/engine.hpp"
#include "agentsim/scenario/io.hpp"
#include "agentsim/training/trainer.hpp"

#include "fixtures.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

using namespace agentsim;
using namespace agentsim::nn;
using nlohmann::json;
namespace fs = std::filesystem;

namespace
{
struct Context
{
  std::string cli;
  fs::path work;
};

struct Outcome
{
  bool pass = false;
  std::string detail;
};

class Stopwatch
{
public:
  double seconds() const
  {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v)
{
  std::ostringstream o;
  o.precision(4);
  o << v;
  return o.str();
}

// ---------------------------------------------------------------- gradients

Tensor random_tensor(Rng & rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0, bool grad = true)
{
  std::vector<double> v(r * c);
  for (auto & x : v) {
    x = rng.uniform(lo, hi);
  }
  return Tensor::from(r, c, std::move(v), grad);
}

Tensor probe(const Tensor & y, const Tensor & w) { return sum(mul(y, w)); }

std::size_t dim(Rng & rng) { return static_cast<std::size_t>(rng.uniform_int(1, 6)); }

struct GradLedger
{
  std::string worst_name;
  double worst = 0.0;

  void record(const std::string & name, double err)
  {
    if (err >= worst) {
      worst = err;
      worst_name = name;
    }
  }
};

void unary(GradLedger & g, Rng & rng, const std::string & name, const std::function<Tensor(const Tensor &)> & op,
  double lo = -1.0, double hi = 1.0)
{
  for (int trial = 0; trial < 20; ++trial) {
    Tensor x = random_tensor(rng, dim(rng), dim(rng), lo, hi);
    const Tensor y0 = op(x);
    const Tensor w = random_tensor(rng, y0.rows(), y0.cols(), -1, 1, false);
    g.record(name, grad_check([&] { return probe(op(x), w); }, {x}).max_rel_error);
  }
}

// Random inputs keep away from the kinks of relu, abs and clamp by at least 1e-3.
Tensor away_from(Rng & rng, std::size_t r, std::size_t c, std::vector<double> kinks)
{
  std::vector<double> v(r * c);
  for (auto & x : v) {
    bool ok = false;
    while (!ok) {
      x = rng.uniform(-1, 1);
      ok = std::all_of(kinks.begin(), kinks.end(), [&](double k) { return std::abs(x - k) > 1e-3; });
    }
  }
  return Tensor::from(r, c, std::move(v), true);
}

GradLedger primitive_gradients()
{
  GradLedger g;
  Rng rng(1101);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t r = dim(rng);
    const std::size_t c = dim(rng);
    const Tensor w = random_tensor(rng, r, c, -1, 1, false);
    for (const auto & [name, kinks, op] : std::vector<std::tuple<std::string, std::vector<double>, std::function<Tensor(const Tensor &)>>>{
           {"relu", {0.0}, [](const Tensor & x) { return relu(x); }},
           {"abs", {0.0}, [](const Tensor & x) { return nn::abs(x); }},
           {"clamp", {-0.5, 0.5}, [](const Tensor & x) { return clamp(x, -0.5, 0.5); }}}) {
      Tensor x = away_from(rng, r, c, kinks);
      g.record(name, grad_check([&, &op = op] { return probe(op(x), w); }, {x}).max_rel_error);
    }
  }
  unary(g, rng, "tanh", [](const Tensor & x) { return nn::tanh(x); });
  unary(g, rng, "exp", [](const Tensor & x) { return nn::exp(x); });
  unary(g, rng, "log", [](const Tensor & x) { return nn::log(x); }, 0.5, 2.0);
  unary(g, rng, "scale", [](const Tensor & x) { return scale(x, -2.5); });
  unary(g, rng, "add_scalar", [](const Tensor & x) { return add_scalar(x, 0.7); });
  unary(g, rng, "softmax", [](const Tensor & x) { return softmax_rows(x); });
  unary(g, rng, "log_softmax", [](const Tensor & x) { return log_softmax_rows(x); });
  unary(g, rng, "sum", [](const Tensor & x) { return sum(x); });
  unary(g, rng, "mean", [](const Tensor & x) { return mean(x); });
  unary(g, rng, "broadcast_rows", [](const Tensor & x) { return broadcast_rows(gather_rows(x, {0}), 3); });
  unary(g, rng, "slice_cols", [](const Tensor & x) { return slice_cols(x, 0, (x.cols() + 1) / 2); });
  unary(g, rng, "gather_rows", [](const Tensor & x) { return gather_rows(x, {x.rows() - 1, 0, 0}); });
  unary(g, rng, "maxpool_rows",
    [](const Tensor & x) { return maxpool_rows(x, std::vector<std::uint8_t>(x.rows(), 1)); });
  unary(g, rng, "segment_max",
    [](const Tensor & x) { return segment_max(x, {{0, (x.rows() + 1) / 2}, {0, x.rows()}}); });

  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t r = dim(rng);
    const std::size_t c = dim(rng);
    const std::size_t k = dim(rng);
    Tensor a = random_tensor(rng, r, k);
    Tensor b = random_tensor(rng, k, c);
    Tensor bt = random_tensor(rng, c, k);
    Tensor bias = random_tensor(rng, 1, c);
    Tensor x = random_tensor(rng, r, c);
    Tensor y = random_tensor(rng, r, c);
    Tensor row = random_tensor(rng, 1, c);
    Tensor gamma = random_tensor(rng, 1, c);
    const Tensor w = random_tensor(rng, r, c, -1, 1, false);
    const Tensor w2 = random_tensor(rng, r, 2 * c, -1, 1, false);
    const Tensor w3 = random_tensor(rng, 2 * r, c, -1, 1, false);
    g.record("matmul", grad_check([&] { return probe(matmul(a, b), w); }, {a, b}).max_rel_error);
    g.record("matmul_nt", grad_check([&] { return probe(matmul_nt(a, bt), w); }, {a, bt}).max_rel_error);
    g.record("linear", grad_check([&] { return probe(linear(a, bt, bias), w); }, {a, bt, bias}).max_rel_error);
    g.record("add", grad_check([&] { return probe(add(x, y), w); }, {x, y}).max_rel_error);
    g.record("sub", grad_check([&] { return probe(sub(x, y), w); }, {x, y}).max_rel_error);
    g.record("mul", grad_check([&] { return probe(mul(x, y), w); }, {x, y}).max_rel_error);
    g.record("add_row", grad_check([&] { return probe(add_row(x, row), w); }, {x, row}).max_rel_error);
    g.record("concat_cols", grad_check([&] { return probe(concat_cols({x, y}), w2); }, {x, y}).max_rel_error);
    g.record("concat_rows", grad_check([&] { return probe(concat_rows({x, y}), w3); }, {x, y}).max_rel_error);
    g.record("layer_norm",
      grad_check([&] { return probe(layer_norm(x, gamma, row), w); }, {x, gamma, row}).max_rel_error);

    Mask m{r, c, std::vector<std::uint8_t>(r * c)};
    for (std::size_t i = 0; i < r * c; ++i) {
      m.allowed[i] = (i % c == (i / c) % c) || rng.bernoulli(0.5);
    }
    g.record("masked_softmax", grad_check([&] { return probe(softmax_rows(x, &m), w); }, {x}).max_rel_error);

    Tensor sx = random_tensor(rng, r, c, 0.5, 2.0);
    Tensor sy = random_tensor(rng, r, c, 0.5, 2.0);
    Tensor rho = random_tensor(rng, r, c, -0.8, 0.8);
    std::vector<double> tx(r * c);
    std::vector<double> ty(r * c);
    for (std::size_t i = 0; i < tx.size(); ++i) {
      tx[i] = rng.uniform(-2, 2);
      ty[i] = rng.uniform(-2, 2);
    }
    g.record("bivariate_nll",
      grad_check([&] { return probe(bivariate_nll(x, y, sx, sy, rho, tx, ty), w); }, {x, y, sx, sy, rho})
        .max_rel_error);
  }
  return g;
}

std::vector<Tensor> params_with_prefix(const SimModel & m, const std::string & prefix)
{
  std::vector<Tensor> out;
  for (const auto & [name, p] : m.params().parameters()) {
    if (name.rfind(prefix, 0) == 0) {
      out.push_back(p);
    }
  }
  return out;
}

GradLedger composite_gradients()
{
  GradLedger g;
  Rng rng(1202);
  GradCheckOptions opt;
  opt.max_coords_per_tensor = 4;
  opt.seed = 5;

  {
    ParamStore store;
    MultiHeadAttention mha(store, "mha", 4, 6, 4, 4, 2, rng);
    Mlp mlp(store, "mlp", {4, 5, 4}, rng);
    Tensor xq = random_tensor(rng, 3, 4);
    Tensor xk = random_tensor(rng, 5, 6);
    std::vector<Tensor> all{xq, xk};
    for (const auto & [name, p] : store.parameters()) {
      all.push_back(p);
    }
    const Tensor w = random_tensor(rng, 3, 4, -1, 1, false);
    g.record("attention+mlp", grad_check([&] { return probe(mlp.forward(mha.forward(xq, xk, xk)), w); }, all).max_rel_error);
  }

  const Scenario s = testing::vehicle_corpus(1, 3, 77)[0];
  const SimModel m = testing::micro_model(13);
  const auto map = tokenize_map(s.polylines, m.config().max_polyline_points);
  const std::size_t split = 12;
  std::vector<std::vector<AgentState>> hist;
  std::vector<AgentState> cur;
  for (const auto & t : s.tracks) {
    hist.emplace_back(t.states.begin(), t.states.begin() + static_cast<std::ptrdiff_t>(split));
    cur.push_back(t.states[split]);
  }
  const std::vector<std::span<const AgentState>> spans(hist.begin(), hist.end());

  g.record("scene_encoder",
    grad_check(
      [&] {
        const SceneContext ctx = m.encoder().encode(spans, map, 0);
        return add(sum(nn::tanh(m.encoder().update_agent_context(ctx, cur))), sum(nn::tanh(ctx.M)));
      },
      params_with_prefix(m, "encoder."), opt)
      .max_rel_error);

  StepTarget target;
  const Frame f(pose_of(s.tracks[0].states[split - 1]));
  for (std::size_t h = 0; h < m.config().horizon; ++h) {
    target.waypoints.push_back(f.to_local(s.tracks[0].states[split + h].position()));
  }
  target.velocity = {9.0, 0.3};
  target.sin_heading = 0.02;
  target.cos_heading = std::sqrt(1 - 0.02 * 0.02);
  g.record("decoder+step_loss",
    grad_check(
      [&] {
        const SceneContext ctx = m.encoder().encode(spans, map, 0);
        DecoderInputs in;
        in.agents = m.encoder().update_agent_context(ctx, cur);
        in.map = ctx.M;
        in.target = 0;
        const auto & pts = m.intention_points(AgentCategory::vehicle);
        const DecoderOutput out = m.decoder().forward_layer(m.decoder().initial_state(pts), in);
        return step_loss(out.gmm, 1, target, {}).total;
      },
      params_with_prefix(m, ""), opt)
      .max_rel_error);

  // Every fed-in state is ground truth here, so the loss is smooth in the parameters.
  TrainConfig tc;
  tc.teacher_forcing = 1.0;
  const TrainSample sample{0, 1, 20};
  g.record("closed_loop_unroll",
    grad_check(
      [&] {
        Rng r(9);
        return closed_loop_unroll(m, s, sample, tc, r).loss;
      },
      params_with_prefix(m, ""), opt)
      .max_rel_error);
  return g;
}

Outcome gradient_integrity(const Context &)
{
  const Stopwatch sw;
  const GradLedger prim = primitive_gradients();
  const GradLedger comp = composite_gradients();
  const double t = sw.seconds();
  const bool ok = prim.worst < 1e-6 && comp.worst < 1e-4 && t < 120;
  return {ok, "primitives worst " + fmt(prim.worst) + " (" + prim.worst_name + ") < 1e-6, composites worst " +
                fmt(comp.worst) + " (" + comp.worst_name + ") < 1e-4, " + fmt(t) + " s < 120 s"};
}

// ---------------------------------------------------------------- NLL

double direct_nll(const GaussianStep & g, double x, double y)
{
  const double dx = (x - g.mu_x) / g.sigma_x;
  const double dy = (y - g.mu_y) / g.sigma_y;
  const double one = 1 - g.rho * g.rho;
  const double density = std::exp(-(dx * dx - 2 * g.rho * dx * dy + dy * dy) / (2 * one)) /
                         (2 * std::numbers::pi * g.sigma_x * g.sigma_y * std::sqrt(one));
  return -std::log(density);
}

Outcome nll_oracle(const Context &)
{
  Rng rng(2024);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const GaussianStep g{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(0.2, 4), rng.uniform(0.2, 4),
      rng.uniform(-0.95, 0.95)};
    const double x = g.mu_x + rng.uniform(-3, 3) * g.sigma_x;
    const double y = g.mu_y + rng.uniform(-3, 3) * g.sigma_y;
    const double want = direct_nll(g, x, y);
    worst = std::max(worst, std::abs(nll_loss(g, x, y) - want) / std::max(1.0, std::abs(want)));
  }
  const double l2pi = std::log(2 * std::numbers::pi);
  struct Anchor
  {
    GaussianStep g;
    double tx;
    double closed;
    double published;
  };
  const std::vector<Anchor> anchors{{{0, 0, 1, 1, 0}, 0, l2pi, 1.8378771},
    {{0, 0, 1, 1, 0.5}, 0, l2pi + 0.5 * std::log(0.75), 1.6940365}, {{0, 0, 1, 1, 0}, 1, l2pi + 0.5, 2.3378771}};
  double anchor_err = 0.0;
  double published_err = 0.0;
  for (const auto & a : anchors) {
    const double v = nll_loss(a.g, a.tx, 0);
    anchor_err = std::max(anchor_err, std::abs(v - a.closed) / a.closed);
    published_err = std::max(published_err, std::abs(v - a.published));
  }
  // The 7-digit decimals are approximations; the second one sits 4.7e-7 above its own closed form.
  const bool ok = worst < 1e-12 && anchor_err < 1e-15 && published_err < 5e-7;
  return {ok, "1000 draws worst rel " + fmt(worst) + " < 1e-12, anchors vs closed form " + fmt(anchor_err) +
                ", vs 7-digit decimals " + fmt(published_err)};
}

// ---------------------------------------------------------------- rollouts

RolloutConfig full_config(std::uint64_t seed)
{
  RolloutConfig c;
  c.seed = seed;
  c.reencode_period = 5;
  return c;
}

SimModel tiny_model(std::uint64_t seed)
{
  SimModel m(ModelConfig::from_preset("tiny"), seed);
  testing::set_fan_intentions(m);
  return m;
}

std::vector<AgentState> logged_adv(const Scenario & s)
{
  const AgentTrack & t = s.tracks[s.adv_index()];
  return {t.states.begin() + static_cast<std::ptrdiff_t>(t.history_len), t.states.end()};
}

Outcome receding_horizon(const Context &)
{
  const Scenario s = testing::vehicle_corpus(1, 3, 21)[0];
  const SimModel m = tiny_model(5);
  const RolloutConfig cfg = full_config(3);
  LogReplayPolicy adv;
  const Rollout base = run_rollout(s, &m, adv, cfg, 0);
  if (base.agents.size() != 3) {
    return {false, "expected 3 simulated agents"};
  }
  Rng noise(77);
  std::size_t runs = 0;
  std::size_t changed = 0;
  std::size_t edits = 0;
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
          ++edits;
        }
      };
      LogReplayPolicy a2;
      changed += run_rollout(s, &m, a2, cfg, 0, hooks).agents == base.agents ? 0 : 1;
      ++runs;
    }
  }
  // Control: the first waypoint does move the agents.
  RolloutHooks first;
  first.on_prediction = [](std::size_t, std::size_t, GmmPrediction & pred) {
    for (auto & mode : pred.modes) {
      mode.steps[0].mu_x += 0.5;
    }
  };
  LogReplayPolicy a3;
  const bool control = run_rollout(s, &m, a3, cfg, 0, first).agents != base.agents;
  return {changed == 0 && control && edits > 0,
    std::to_string(runs) + " perturbed rollouts (" + std::to_string(edits) + " mode edits), " +
      std::to_string(changed) + " changed; first-step control " + (control ? "moves" : "does not move")};
}

Outcome determinism(const Context &)
{
  const auto corpus = testing::vehicle_corpus(10, 4, 31);
  const SimModel m = testing::micro_model(17);
  RolloutConfig cfg = full_config(1234);
  cfg.rollouts = 32;
  LogReplayPolicy adv;
  const int saved = omp_get_max_threads();
  omp_set_num_threads(4);
  std::size_t mismatches = 0;
  for (const Scenario & s : corpus) {
    cfg.parallel = true;
    const std::string a = save_rollout_set(run_simulation_set(s, {&m}, adv, cfg));
    const std::string b = save_rollout_set(run_simulation_set(s, {&m}, adv, cfg));
    cfg.parallel = false;
    const std::string c = save_rollout_set(run_simulation_set(s, {&m}, adv, cfg));
    mismatches += (a == b ? 0 : 1) + (a == c ? 0 : 1);
  }
  omp_set_num_threads(saved);
  return {mismatches == 0, "10 scenarios x 32 rollouts, parallel x2 (4 threads) and serial: " +
                             std::to_string(mismatches) + " byte mismatches"};
}

Outcome factorization_probe(const Context &)
{
  const Scenario s = testing::vehicle_corpus(1, 3, 30)[0];
  const SimModel m = tiny_model(3);
  const RolloutConfig cfg = full_config(8);
  const LogReplayPolicy replay;
  const ScriptedPolicy scripted(logged_adv(s));
  const bool independent = conditional_independence_probe(s, m, replay, scripted, cfg);

  std::vector<AgentState> swerve = logged_adv(s);
  for (std::size_t t = 40; t < swerve.size(); ++t) {
    swerve[t].y += 0.5 * static_cast<double>(t - 39);
  }
  const ProbeResult pr = compare_policies(s, m, replay, ScriptedPolicy(swerve), cfg);
  const bool causal = pr.adv_divergence == std::optional<std::size_t>{40} && pr.world_divergence.has_value() &&
                      *pr.world_divergence >= 40 && !pr.independent;
  return {independent && causal, std::string("log-replay vs scripted copy independent: ") +
                                   (independent ? "yes" : "no") + "; swerve at step 40, world diverges at " +
                                   (pr.world_divergence ? std::to_string(*pr.world_divergence) : "never")};
}

// ---------------------------------------------------------------- training

double max_likelihood_ade(const Scenario & s, const SimModel & m)
{
  RolloutConfig cfg = full_config(0);
  cfg.rollouts = 1;
  cfg.sampling.mode = SamplingMode::max_likelihood;
  cfg.reencode_period = std::min<std::size_t>(5, m.config().decoder_layers);
  return evaluate(s, run_simulation_set(s, {&m}, LogReplayPolicy{}, cfg)).min_ade;
}

Outcome overfit(const Context &)
{
  const std::vector<Scenario> corpus = testing::vehicle_corpus(1, 3, 15, false);
  SimModel m(ModelConfig::from_preset("small"), 4);
  m.set_intention_points(fit_intention_points(corpus, AgentCategory::vehicle, m.config().modes, 0));
  TrainConfig tc;
  tc.epochs = 5;
  tc.samples_per_track = 32;
  tc.lr = 1e-3;
  tc.seed = 1;
  const Stopwatch sw;
  const double before = max_likelihood_ade(corpus[0], m);
  const TrainResult r = train(m, corpus, tc);
  const double train_s = sw.seconds();
  const double ade = max_likelihood_ade(corpus[0], m);
  const bool ok = r.progress.step <= 500 && ade < 0.1 && train_s < 600;
  return {ok, std::to_string(r.progress.step) + " steps in " + fmt(train_s) + " s, ADE " + fmt(before) + " -> " +
                fmt(ade) + " m (need < 0.1)"};
}

// ---------------------------------------------------------------- sampling

Outcome sampling_statistics(const Context &)
{
  Rng rng(555);
  std::size_t outside = 0;
  std::size_t cells = 0;
  std::size_t leaked = 0;
  for (std::size_t k : {std::size_t{2}, std::size_t{3}, std::size_t{5}}) {
    GmmPrediction p;
    double total = 0.0;
    for (int i = 0; i < 16; ++i) {
      GmmMode mode;
      mode.prob = rng.uniform(0.01, 1.0);
      total += mode.prob;
      mode.steps.resize(10);
      p.modes.push_back(mode);
    }
    for (auto & mode : p.modes) {
      mode.prob /= total;
    }
    SamplingPolicy pol;
    pol.k = k;
    const auto top = top_k_modes(p, k);
    double mass = 0.0;
    for (std::size_t i : top) {
      mass += p.modes[i].prob;
    }
    const std::size_t n = 100000;
    std::vector<std::size_t> count(p.modes.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++count[sample_mode(p, pol, 0, rng)];
    }
    for (std::size_t i = 0; i < p.modes.size(); ++i) {
      if (std::find(top.begin(), top.end(), i) == top.end()) {
        leaked += count[i];
        continue;
      }
      const double q = p.modes[i].prob / mass;
      const double sd = std::sqrt(n * q * (1 - q));
      outside += std::abs(static_cast<double>(count[i]) - n * q) < 3 * sd ? 0 : 1;
      ++cells;
    }
  }

  std::size_t ens_outside = 0;
  for (std::size_t members : {std::size_t{2}, std::size_t{3}, std::size_t{4}}) {
    std::vector<std::size_t> count(members, 0);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      for (std::size_t r = 0; r < 32; ++r) {
        ++count[ensemble_pick(seed, r, members)];
      }
    }
    const double q = 1.0 / static_cast<double>(members);
    const double sd = std::sqrt(3200 * q * (1 - q));
    for (std::size_t c : count) {
      ens_outside += std::abs(static_cast<double>(c) - 3200 * q) < 3 * sd ? 0 : 1;
    }
  }

  // The picks are the ones a simulation set actually uses.
  const Scenario s = testing::vehicle_corpus(1, 3, 2)[0];
  const SimModel a = testing::micro_model(1);
  const SimModel b = testing::micro_model(2);
  RolloutConfig cfg = full_config(6);
  cfg.steps = 3;
  cfg.rollouts = 16;
  const RolloutSet set = run_simulation_set(s, {&a, &b}, LogReplayPolicy{}, cfg);
  std::size_t wrong = 0;
  for (std::size_t r = 0; r < set.rollouts.size(); ++r) {
    wrong += set.rollouts[r].model_fingerprint == (ensemble_pick(cfg.seed, r, 2) == 0 ? a : b).fingerprint() ? 0 : 1;
  }

  return {outside == 0 && leaked == 0 && ens_outside == 0 && wrong == 0,
    "top-k: " + std::to_string(outside) + "/" + std::to_string(cells) + " modes outside 3 sigma over 1e5 draws, " +
      std::to_string(leaked) + " draws outside the top k; ensemble: " + std::to_string(ens_outside) +
      " members outside 3 sigma over 3200 picks, " + std::to_string(wrong) + " set rollouts on the wrong member"};
}

// ---------------------------------------------------------------- metrics

double seg_dist(Vec2 p, Vec2 a, Vec2 b)
{
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  double t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / (dx * dx + dy * dy);
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - a.x - t * dx, p.y - a.y - t * dy);
}

// Inside test in the box's own frame.
bool in_box(const OrientedBox & b, Vec2 p)
{
  const double c = std::cos(b.heading);
  const double s = std::sin(b.heading);
  const double lx = (p.x - b.center.x) * c + (p.y - b.center.y) * s;
  const double ly = -(p.x - b.center.x) * s + (p.y - b.center.y) * c;
  return std::abs(lx) <= b.length / 2 && std::abs(ly) <= b.width / 2;
}

std::array<Vec2, 4> box_corners(const OrientedBox & b)
{
  const double c = std::cos(b.heading);
  const double s = std::sin(b.heading);
  std::array<Vec2, 4> out;
  const double hx[4] = {1, -1, -1, 1};
  const double hy[4] = {1, 1, -1, -1};
  for (int i = 0; i < 4; ++i) {
    const double lx = hx[i] * b.length / 2;
    const double ly = hy[i] * b.width / 2;
    out[i] = {b.center.x + lx * c - ly * s, b.center.y + lx * s + ly * c};
  }
  return out;
}

// Sample both boundaries densely; any sample inside the other box means overlap.
double sampled_box_distance(const OrientedBox & a, const OrientedBox & b, std::size_t per_edge)
{
  double best = std::numeric_limits<double>::infinity();
  const auto scan = [&](const OrientedBox & from, const OrientedBox & to) {
    const auto cf = box_corners(from);
    const auto ct = box_corners(to);
    for (std::size_t e = 0; e < 4; ++e) {
      for (std::size_t i = 0; i <= per_edge; ++i) {
        const double u = static_cast<double>(i) / static_cast<double>(per_edge);
        const Vec2 p{cf[e].x + u * (cf[(e + 1) % 4].x - cf[e].x), cf[e].y + u * (cf[(e + 1) % 4].y - cf[e].y)};
        if (in_box(to, p)) {
          best = 0.0;
          return;
        }
        for (std::size_t f = 0; f < 4; ++f) {
          best = std::min(best, seg_dist(p, ct[f], ct[(f + 1) % 4]));
        }
      }
    }
  };
  scan(a, b);
  scan(b, a);
  return best;
}

Outcome metrics_oracles(const Context &)
{
  Rng rng(4242);
  double box_worst = 0.0;
  for (int i = 0; i < 300; ++i) {
    const OrientedBox a{{rng.uniform(-5, 5), rng.uniform(-5, 5)}, rng.uniform(-3.2, 3.2), rng.uniform(0.5, 5),
      rng.uniform(0.5, 2.5)};
    const OrientedBox b{{rng.uniform(-5, 5), rng.uniform(-5, 5)}, rng.uniform(-3.2, 3.2), rng.uniform(0.5, 5),
      rng.uniform(0.5, 2.5)};
    box_worst = std::max(box_worst, std::abs(box_distance(a, b) - sampled_box_distance(a, b, 2500)));
  }

  std::size_t pip_points = 0;
  std::size_t pip_disagree = 0;
  for (int p = 0; p < 50; ++p) {
    const std::size_t n = 3 + rng.below(15);
    std::vector<double> ang(n);
    for (auto & a : ang) {
      a = rng.uniform(0, 2 * std::numbers::pi);
    }
    std::sort(ang.begin(), ang.end());
    std::vector<Vec2> poly;
    for (double a : ang) {
      const double r = rng.uniform(2, 10);
      poly.push_back({r * std::cos(a), r * std::sin(a)});
    }
    if (rng.bernoulli(0.5)) {
      std::reverse(poly.begin(), poly.end());
    }
    for (int i = 0; i < 1000; ++i) {
      const Vec2 q{rng.uniform(-11, 11), rng.uniform(-11, 11)};
      pip_disagree += point_in_polygon(q, poly) == (winding_number(q, poly) != 0) ? 0 : 1;
      ++pip_points;
    }
  }

  double ade_worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t agents = 1 + rng.below(5);
    const std::size_t rolls = 1 + rng.below(8);
    const std::size_t steps = 1 + rng.below(80);
    const auto rand_state = [&] {
      return make_state(rng.uniform(-50, 50), rng.uniform(-50, 50), 0, 0, 0, 0, 4, 2, AgentCategory::vehicle);
    };
    std::vector<std::vector<AgentState>> logged(agents, std::vector<AgentState>(steps));
    std::vector<std::vector<std::vector<AgentState>>> rs(rolls, logged);
    for (auto & a : logged) {
      for (auto & st : a) {
        st = rand_state();
      }
    }
    for (auto & r : rs) {
      for (auto & a : r) {
        for (auto & st : a) {
          st = rand_state();
        }
      }
    }
    double want = 0.0;
    for (std::size_t a = 0; a < agents; ++a) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < rolls; ++r) {
        double acc = 0.0;
        for (std::size_t t = 0; t < steps; ++t) {
          acc += std::hypot(rs[r][a][t].x - logged[a][t].x, rs[r][a][t].y - logged[a][t].y);
        }
        best = std::min(best, acc / static_cast<double>(steps));
      }
      want += best / static_cast<double>(agents);
    }
    ade_worst = std::max(ade_worst, std::abs(min_ade(rs, logged) - want));
  }

  // Multiples of 2 pi on any subset of headings leave kinematic features and the full score unchanged.
  double feature_wrap = 0.0;
  double score_wrap = 0.0;
  const auto corpus = testing::vehicle_corpus(4, 4, 63);
  const SimModel m = testing::micro_model(63);
  for (const Scenario & s : corpus) {
    RolloutConfig cfg = full_config(3);
    cfg.rollouts = 8;
    const RolloutSet set = run_simulation_set(s, {&m}, LogReplayPolicy{}, cfg);
    RolloutSet shifted = set;
    for (auto & r : shifted.rollouts) {
      for (auto & a : r.agents) {
        for (auto & st : a) {
          st.heading += 2 * std::numbers::pi * static_cast<double>(rng.uniform_int(-2, 2));
        }
      }
    }
    const MetricBundle x = evaluate(s, set);
    const MetricBundle y = evaluate(s, shifted);
    score_wrap = std::max(score_wrap, std::abs(x.meta - y.meta));
    for (std::size_t c = 0; c < kNumComponents; ++c) {
      score_wrap = std::max(score_wrap, std::abs(x.components[c] - y.components[c]));
    }
    for (std::size_t r = 0; r < set.rollouts.size(); ++r) {
      for (std::size_t a = 0; a < set.rollouts[r].agents.size(); ++a) {
        const KinematicFeatures ka = kinematic_features(set.rollouts[r].agents[a]);
        const KinematicFeatures kb = kinematic_features(shifted.rollouts[r].agents[a]);
        for (std::size_t i = 0; i < ka.angular_speed.size(); ++i) {
          feature_wrap = std::max(feature_wrap, std::abs(ka.angular_speed[i] - kb.angular_speed[i]));
        }
        for (std::size_t i = 0; i < ka.angular_accel.size(); ++i) {
          feature_wrap = std::max(feature_wrap, std::abs(ka.angular_accel[i] - kb.angular_accel[i]));
        }
      }
    }
  }

  const bool ok = box_worst < 1e-2 && pip_disagree == 0 && ade_worst <= 1e-12 && feature_wrap < 1e-9 &&
                  score_wrap < 1e-12;
  return {ok, "box distance vs sampling " + fmt(box_worst) + " m < 1e-2; point-in-polygon " +
                std::to_string(pip_points - pip_disagree) + "/" + std::to_string(pip_points) + " agree; min_ade " +
                fmt(ade_worst) + " <= 1e-12; 2pi wrap: features " + fmt(feature_wrap) + ", scores " + fmt(score_wrap)};
}

// ---------------------------------------------------------------- CLI

int run_cli(const Context & ctx, const std::string & args, const fs::path & log)
{
  const std::string cmd = ctx.cli + " " + args + " >> " + log.string() + " 2>&1";
  const int s = std::system(cmd.c_str());
  return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
}

Outcome pipeline_smoke(const Context & ctx)
{
  const fs::path root = ctx.work / "pipeline";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path log = root / "cli.log";
  const std::string r = root.string();
  const Stopwatch sw;
  const std::vector<std::pair<std::string, std::string>> steps{
    {"gen-data", "gen-data --n 10 --seed 5 --out " + r + "/data"},
    {"fit-intents", "fit-intents --data " + r + "/data --out " + r + "/intents.json"},
    {"train", "train --data " + r + "/data --intents " + r + "/intents.json --out " + r +
                "/run --preset tiny --epochs 1"},
    {"simulate", "simulate --data " + r + "/data --checkpoint " + r + "/run/model.bin --rollouts 8 --out " + r +
                   "/sim"},
    {"evaluate", "evaluate --data " + r + "/data --rollouts " + r + "/sim --out " + r + "/metrics"},
  };
  for (const auto & [name, args] : steps) {
    const int code = run_cli(ctx, args, log);
    if (code != 0) {
      return {false, name + " exited " + std::to_string(code) + " (log " + log.string() + ")"};
    }
  }
  const double t = sw.seconds();

  // Schema checks go through the same validating loaders a consumer would use.
  try {
    const auto corpus = read_scenario_dir(root / "data");
    if (corpus.size() != 10) {
      return {false, "expected 10 scenarios"};
    }
    if (load_intention_tables(read_text_file(root / "intents.json")).empty()) {
      return {false, "empty intention table"};
    }
    const SimModel m = SimModel::load(root / "run" / "model.bin");
    for (const Scenario & s : corpus) {
      const RolloutSet set = load_rollout_set(read_text_file(root / "sim" / (s.scenario_id + ".rollouts.json")), s);
      validate_rollout_set(set, 8);
      if (set.model_fingerprint != m.fingerprint()) {
        return {false, "rollout fingerprint does not match the trained model"};
      }
    }
    const json report = json::parse(read_text_file(root / "metrics" / "metrics.json"));
    for (const char * key : {"binning_version", "histogram_epsilon", "scenarios", "corpus_mean"}) {
      if (!report.contains(key)) {
        return {false, std::string("metrics.json lacks ") + key};
      }
    }
    if (report.at("scenarios").size() != corpus.size()) {
      return {false, "metrics.json scenario count"};
    }
    for (const char * key : {"meta", "min_ade", "collision_rate", "offroad_rate"}) {
      if (!report.at("corpus_mean").contains(key)) {
        return {false, std::string("corpus_mean lacks ") + key};
      }
    }
    for (const char * f : {"data/manifest.json", "run/manifest.json", "sim/manifest.json", "metrics/manifest.json"}) {
      const json mf = json::parse(read_text_file(root / f));
      if (!mf.contains("verb") || !mf.contains("outputs")) {
        return {false, std::string(f) + " malformed"};
      }
    }
  } catch (const std::exception & e) {
    return {false, std::string("schema: ") + e.what()};
  }
  return {t < 600, "5 verbs exit 0, outputs reload through the validating loaders, " + fmt(t) + " s < 600 s"};
}

json read_corpus_mean(const fs::path & dir)
{
  return json::parse(read_text_file(dir / "metrics.json")).at("corpus_mean");
}

Outcome generalization(const Context & ctx)
{
  const fs::path root = ctx.work / "generalization";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path log = root / "cli.log";
  const std::string r = root.string();
  const std::vector<std::pair<std::string, std::string>> prep{
    {"gen-data train", "gen-data --n 200 --seed 101 --out " + r + "/train"},
    {"gen-data held-out", "gen-data --n 20 --seed 202 --out " + r + "/held"},
    {"fit-intents", "fit-intents --data " + r + "/train --out " + r + "/intents.json"},
  };
  for (const auto & [name, args] : prep) {
    if (const int code = run_cli(ctx, args, log); code != 0) {
      return {false, name + " exited " + std::to_string(code)};
    }
  }
  const Stopwatch sw;
  if (const int code = run_cli(ctx,
        "train --data " + r + "/train --intents " + r + "/intents.json --out " + r +
          "/run --preset tiny --epochs 30 --lr 3e-4 --checkpoint-every 5000",
        log);
      code != 0) {
    return {false, "train exited " + std::to_string(code)};
  }
  const double train_s = sw.seconds();
  const std::string ckpt = r + "/run/model.bin";
  const std::vector<std::pair<std::string, std::string>> sims{
    {"model", "--rollouts 32"},
    {"cv", "--rollouts 32 --world constant-velocity"},
    {"ml", "--rollouts 1 --sampling max_likelihood"},
  };
  for (const auto & [name, extra] : sims) {
    const std::string sim = "simulate --data " + r + "/held --checkpoint " + ckpt + " --policy log-replay " + extra +
                            " --out " + r + "/sim_" + name;
    const std::string ev =
      "evaluate --data " + r + "/held --rollouts " + r + "/sim_" + name + " --out " + r + "/eval_" + name;
    if (run_cli(ctx, sim, log) != 0 || run_cli(ctx, ev, log) != 0) {
      return {false, "simulate/evaluate " + name + " failed"};
    }
  }
  const double model_ade = read_corpus_mean(root / "eval_model").at("min_ade").get<double>();
  const double cv_ade = read_corpus_mean(root / "eval_cv").at("min_ade").get<double>();
  const double offroad = read_corpus_mean(root / "eval_ml").at("offroad_rate").get<double>();
  const double gain = 1.0 - model_ade / cv_ade;
  const bool ok = gain >= 0.3 && offroad < 0.05 && train_s < 7200;
  return {ok, "held-out minADE " + fmt(model_ade) + " m vs constant velocity " + fmt(cv_ade) + " m (" +
                fmt(100 * gain) + "% better, need >= 30%); max-likelihood offroad " + fmt(100 * offroad) +
                "% (need < 5%); training " + fmt(train_s / 60) + " min < 120 min"};
}
}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app("agentsim acceptance criteria");
  Context ctx;
  std::string work = (fs::temp_directory_path() / "agentsim_acceptance").string();
  std::vector<std::string> only;
  app.add_option("--cli", ctx.cli, "Path to the agentsim executable")->required();
  app.add_option("--work", work, "Scratch directory");
  app.add_option("--only", only, "Run just these criteria");
  CLI11_PARSE(app, argc, argv);
  ctx.work = work;
  fs::create_directories(ctx.work);

  const std::vector<std::pair<std::string, std::function<Outcome(const Context &)>>> criteria{
    {"gradient-integrity", gradient_integrity},
    {"nll-oracle", nll_oracle},
    {"receding-horizon", receding_horizon},
    {"determinism", determinism},
    {"factorization-probe", factorization_probe},
    {"overfit", overfit},
    {"generalization", generalization},
    {"sampling-statistics", sampling_statistics},
    {"metrics-oracles", metrics_oracles},
    {"pipeline-smoke", pipeline_smoke},
  };
  const std::set<std::string> wanted(only.begin(), only.end());
  int failed = 0;
  for (const auto & [name, fn] : criteria) {
    if (!wanted.empty() && wanted.count(name) == 0) {
      continue;
    }
    const Stopwatch sw;
    Outcome o;
    try {
      o = fn(ctx);
    } catch (const std::exception & e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << " [" << fmt(sw.seconds()) << " s]"
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
