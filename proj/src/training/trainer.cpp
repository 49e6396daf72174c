#include "agentsim/training/trainer.hpp"

#include "agentsim/error.hpp"
#include "agentsim/nn/adamw.hpp"
#include "agentsim/nn/checkpoint.hpp"
#include "agentsim/nn/ops.hpp"
#include "agentsim/rollout/policies.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace agentsim
{
void TrainConfig::validate() const
{
  weights.validate();
  if (epochs < 1) {
    throw ValidationError("train.epochs must be positive");
  }
  if (!(lr > 0.0) || !std::isfinite(lr)) {
    throw ValidationError("train.lr must be positive");
  }
  if (!(weight_decay >= 0.0)) {
    throw ValidationError("train.weight_decay must be non-negative");
  }
  if (!(teacher_forcing >= 0.0 && teacher_forcing <= 1.0)) {
    throw ValidationError("train.teacher_forcing must lie in [0, 1]");
  }
  if (unroll < 1 || unroll > 10) {
    throw ValidationError("train.unroll must lie in [1, 10]");
  }
  if (!(clip_norm > 0.0)) {
    throw ValidationError("train.clip_norm must be positive");
  }
  if (samples_per_track < 1 || batch_size < 1) {
    throw ValidationError("train.samples_per_track and train.batch_size must be positive");
  }
}

nlohmann::json TrainConfig::to_json() const
{
  return {{"epochs", epochs}, {"lr", lr}, {"weight_decay", weight_decay},
    {"weights", {{"lambda1", weights.lambda1}, {"lambda2", weights.lambda2}, {"lambda3", weights.lambda3}}},
    {"teacher_forcing", teacher_forcing}, {"unroll", unroll}, {"clip_norm", clip_norm},
    {"samples_per_track", samples_per_track}, {"batch_size", batch_size}, {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json & j)
{
  TrainConfig c;
  for (const auto & [key, v] : j.items()) {
    if (key == "epochs") {
      c.epochs = v.get<std::size_t>();
    } else if (key == "lr") {
      c.lr = v.get<double>();
    } else if (key == "weight_decay") {
      c.weight_decay = v.get<double>();
    } else if (key == "teacher_forcing") {
      c.teacher_forcing = v.get<double>();
    } else if (key == "unroll") {
      c.unroll = v.get<std::size_t>();
    } else if (key == "clip_norm") {
      c.clip_norm = v.get<double>();
    } else if (key == "samples_per_track") {
      c.samples_per_track = v.get<std::size_t>();
    } else if (key == "batch_size") {
      c.batch_size = v.get<std::size_t>();
    } else if (key == "seed") {
      c.seed = v.get<std::uint64_t>();
    } else if (key == "weights") {
      for (const auto & [wk, wv] : v.items()) {
        if (wk == "lambda1") {
          c.weights.lambda1 = wv.get<double>();
        } else if (wk == "lambda2") {
          c.weights.lambda2 = wv.get<double>();
        } else if (wk == "lambda3") {
          c.weights.lambda3 = wv.get<double>();
        } else {
          throw ValidationError("unknown train.weights key '" + wk + "'");
        }
      }
    } else {
      throw ValidationError("unknown train key '" + key + "'");
    }
  }
  return c;
}

TrainProgress TrainProgress::from_json(const nlohmann::json & j)
{
  TrainProgress p;
  p.epoch = j.at("epoch").get<std::size_t>();
  p.index = j.at("index").get<std::size_t>();
  p.step = j.at("step").get<std::size_t>();
  return p;
}

namespace
{
StepTarget step_target(const AgentTrack & track, std::size_t first, std::size_t horizon, const AgentState & current)
{
  const Frame frame(pose_of(current));
  StepTarget t;
  const std::size_t n = std::min(horizon, track.states.size() - first);
  for (std::size_t h = 0; h < n; ++h) {
    t.waypoints.push_back(frame.to_local(track.states[first + h].position()));
  }
  const AgentState & gt = track.states[first];
  t.velocity = frame.rotate_to_local({gt.vx, gt.vy});
  const double dh = frame.heading_to_local(gt.heading);
  t.sin_heading = std::sin(dh);
  t.cos_heading = std::cos(dh);
  return t;
}
}  // namespace

UnrollResult closed_loop_unroll(
  const SimModel & model, const Scenario & scenario, const TrainSample & sample, const TrainConfig & config, Rng & rng)
{
  require(sample.track < scenario.tracks.size(), "train sample: track index out of range");
  const AgentTrack & target_track = scenario.tracks[sample.track];
  const std::size_t s = sample.split;
  const std::size_t len = target_track.states.size();
  if (s < kMinSplit || s >= len) {
    throw ValidationError("train sample: split out of range");
  }
  const std::size_t horizon = model.config().horizon;
  const std::size_t u = std::min({config.unroll, len - s, model.decoder().layer_count()});

  // Context agents: every track with ground truth through the unroll.
  std::vector<std::size_t> agents;
  std::size_t target = 0;
  for (std::size_t i = 0; i < scenario.tracks.size(); ++i) {
    const AgentTrack & tr = scenario.tracks[i];
    if (i == sample.track) {
      target = agents.size();
      agents.push_back(i);
    } else if (tr.states.size() >= s + u && tr.states[s - 1].valid) {
      agents.push_back(i);
    }
  }
  const std::size_t adv_track = scenario.adv_index();
  const bool adv_present = adv_track != sample.track && scenario.tracks[adv_track].states.size() >= s + u;

  std::vector<std::span<const AgentState>> histories;
  for (std::size_t i : agents) {
    histories.emplace_back(scenario.tracks[i].states.data(), s);
  }
  const std::vector<MapToken> map = tokenize_map(scenario.polylines, model.config().max_polyline_points);
  const SceneContext ctx = model.encoder().encode(histories, map, target, 0);
  const std::vector<Vec2> & points = model.intention_points(target_track.states[s - 1].category);
  DecoderState state = model.decoder().initial_state(points);

  UnrollResult out;
  AgentState current = target_track.states[s - 1];
  std::vector<AgentState> now(agents.size());
  for (std::size_t t = 0; t < u; ++t) {
    for (std::size_t a = 0; a < agents.size(); ++a) {
      now[a] = a == target ? current : scenario.tracks[agents[a]].states[s - 1 + t];
    }
    DecoderInputs in;
    in.agents = model.encoder().update_agent_context(ctx, now);
    in.map = ctx.M;
    in.target = target;
    if (adv_present) {
      const AgentState & adv = scenario.tracks[adv_track].states[s + t];
      const Vec2 p = ctx.frame.to_local(adv.position());
      in.adv_pose = Pose2{p.x, p.y, ctx.frame.heading_to_local(adv.heading)};
    }
    DecoderOutput dec = model.decoder().forward_layer(state, in);
    state = std::move(dec.next);

    const StepTarget gt = step_target(target_track, s + t, horizon, current);
    const std::size_t positive = select_positive_mode(points, gt.waypoints);
    StepLoss sl = step_loss(dec.gmm, positive, gt, config.weights);
    if (!std::isfinite(sl.total.item())) {
      throw NumericError("non-finite training loss");
    }
    out.trace.push_back({sl.total.item(), sl.nll, sl.ce, sl.vel, sl.heading});
    out.states.push_back(current);
    out.loss = out.loss.defined() ? nn::add(out.loss, sl.total) : sl.total;

    // Fed-back state carries no gradient.
    if (rng.bernoulli(config.teacher_forcing)) {
      current = target_track.states[s + t];
    } else {
      current = receding_horizon_step(to_prediction(dec.gmm), positive, current);
    }
  }
  return out;
}

std::vector<StepRecord> closed_loop_train_step(
  SimModel & model, const Scenario & scenario, const TrainSample & sample, const TrainConfig & config, Rng & rng)
{
  model.params().zero_grad();
  UnrollResult r = closed_loop_unroll(model, scenario, sample, config, rng);
  r.loss.backward();
  nn::clip_grad_norm(model.params(), config.clip_norm);
  nn::adamw_step(model.params(), {config.lr, 0.9, 0.999, 1e-8, config.weight_decay});
  return r.trace;
}

std::vector<TrainSample> epoch_samples(
  const std::vector<Scenario> & corpus, const TrainConfig & config, std::size_t epoch)
{
  std::vector<TrainSample> all;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    Rng rng = Rng::stream(config.seed, {hash_string("samples"), epoch, i});
    const auto part = make_training_samples(corpus[i], i, config.samples_per_track, rng);
    all.insert(all.end(), part.begin(), part.end());
  }
  Rng shuffle = Rng::stream(config.seed, {hash_string("shuffle"), epoch});
  for (std::size_t i = all.size(); i > 1; --i) {
    std::swap(all[i - 1], all[static_cast<std::size_t>(shuffle.below(i))]);
  }
  return all;
}

void save_training_checkpoint(const std::filesystem::path & path, const SimModel & model, const TrainConfig & config,
  const TrainProgress & progress)
{
  model.save(path, true, {{"config", config.to_json()}, {"progress", progress.to_json()}});
}

ResumeState load_training_checkpoint(const std::filesystem::path & path)
{
  const nn::Checkpoint ckpt = nn::load_checkpoint(path);
  if (!ckpt.meta.contains("training")) {
    throw ValidationError("checkpoint has no training state: " + path.string());
  }
  const auto & t = ckpt.meta.at("training");
  return {SimModel::from_checkpoint(ckpt), TrainConfig::from_json(t.at("config")),
    TrainProgress::from_json(t.at("progress"))};
}

TrainResult train(
  SimModel & model, const std::vector<Scenario> & corpus, const TrainConfig & config, const TrainOptions & options)
{
  config.validate();
  if (corpus.empty()) {
    throw ValidationError("train: empty corpus");
  }
  std::set<AgentCategory> seen;
  for (const Scenario & sc : corpus) {
    for (const AgentTrack & tr : sc.tracks) {
      seen.insert(tr.states.front().category);
    }
  }
  for (AgentCategory c : seen) {
    if (!model.has_intention_points(c)) {
      throw ValidationError("no intention points for category '" + std::string(to_string(c)) + "' in the corpus");
    }
  }

  std::ofstream log;
  if (options.log_csv) {
    const bool fresh = !std::filesystem::exists(*options.log_csv) || std::filesystem::file_size(*options.log_csv) == 0;
    log.open(*options.log_csv, std::ios::app);
    if (!log) {
      throw Error("cannot open training log " + options.log_csv->string());
    }
    log.precision(17);
    if (fresh) {
      log << kTrainLogHeader << '\n';
    }
  }
  if (options.checkpoint_dir) {
    std::filesystem::create_directories(*options.checkpoint_dir);
  }
  const auto checkpoint = [&](const TrainProgress & p) {
    if (!options.checkpoint_dir) {
      return;
    }
    const auto name = "ckpt_" + std::to_string(p.step) + ".bin";
    save_training_checkpoint(*options.checkpoint_dir / name, model, config, p);
    save_training_checkpoint(*options.checkpoint_dir / "latest.bin", model, config, p);
  };

  TrainResult result;
  TrainProgress p = options.resume;
  while (p.epoch < config.epochs) {
    const std::vector<TrainSample> samples = epoch_samples(corpus, config, p.epoch);
    double epoch_sum = 0.0;
    std::size_t epoch_batches = 0;
    const bool whole_epoch = p.index == 0;
    while (p.index < samples.size()) {
      if (options.stop_after_steps != 0 && result.log.size() >= options.stop_after_steps) {
        checkpoint(p);
        result.progress = p;
        return result;
      }
      const std::size_t end = std::min(samples.size(), p.index + config.batch_size);
      const double inv = 1.0 / static_cast<double>(end - p.index);
      model.params().zero_grad();
      StepRecord sum;
      for (std::size_t i = p.index; i < end; ++i) {
        Rng rng = Rng::stream(config.seed, {hash_string("forcing"), p.epoch, i});
        const TrainSample & smp = samples[i];
        UnrollResult r = closed_loop_unroll(model, corpus[smp.scenario], smp, config, rng);
        nn::scale(r.loss, inv).backward();
        for (const StepRecord & s : r.trace) {
          sum.total += s.total * inv;
          sum.nll += s.nll * inv;
          sum.ce += s.ce * inv;
          sum.vel += s.vel * inv;
          sum.heading += s.heading * inv;
        }
      }
      nn::clip_grad_norm(model.params(), config.clip_norm);
      nn::adamw_step(model.params(), {config.lr, 0.9, 0.999, 1e-8, config.weight_decay});

      p.index = end;
      ++p.step;
      const LogRow row{p.epoch, p.step, sum};
      result.log.push_back(row);
      epoch_sum += sum.total;
      ++epoch_batches;
      if (log) {
        log << row.epoch << ',' << row.step << ',' << sum.total << ',' << sum.nll << ',' << sum.vel << ','
            << sum.heading << ',' << sum.ce << '\n';
      }
      if (options.on_step) {
        options.on_step(row);
      }
      if (options.checkpoint_every != 0 && p.step % options.checkpoint_every == 0) {
        checkpoint(p);
      }
    }
    if (whole_epoch && epoch_batches > 0) {
      result.epoch_mean_loss.push_back(epoch_sum / static_cast<double>(epoch_batches));
    }
    ++p.epoch;
    p.index = 0;
    if (options.checkpoint_every == 0) {
      checkpoint(p);
    }
  }
  result.progress = p;
  return result;
}
}  // namespace agentsim
