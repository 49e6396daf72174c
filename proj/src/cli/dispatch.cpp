#include "agentsim/cli/dispatch.hpp"

#include "agentsim/cli/run_config.hpp"
#include "agentsim/error.hpp"
#include "agentsim/metrics/scoring.hpp"
#include "agentsim/rollout/engine.hpp"
#include "agentsim/scenario/io.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <ostream>
#include <sstream>

namespace agentsim
{
namespace fs = std::filesystem;
using nlohmann::json;

std::string save_intention_tables(const std::map<AgentCategory, IntentionPointSet> & tables)
{
  json cats = json::object();
  for (const auto & [cat, set] : tables) {
    json pts = json::array();
    for (const Vec2 & p : set.points) {
      pts.push_back({p.x, p.y});
    }
    cats[std::string(to_string(cat))] = {{"requested_k", set.requested_k}, {"points", pts}};
  }
  return json{{"kind", "agentsim-intentions"}, {"categories", cats}}.dump(1) + "\n";
}

std::map<AgentCategory, IntentionPointSet> load_intention_tables(std::string_view bytes)
{
  std::map<AgentCategory, IntentionPointSet> out;
  try {
    const json doc = json::parse(bytes);
    if (doc.value("kind", std::string()) != "agentsim-intentions") {
      throw ValidationError("not an intention-point file");
    }
    for (const auto & [name, v] : doc.at("categories").items()) {
      IntentionPointSet s;
      s.category = parse_category(name);
      s.requested_k = v.at("requested_k").get<std::size_t>();
      for (const auto & p : v.at("points")) {
        s.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      }
      if (s.points.empty()) {
        throw ValidationError("intention table for '" + name + "' is empty");
      }
      out[s.category] = std::move(s);
    }
  } catch (const json::exception & e) {
    throw ValidationError(std::string("malformed intention-point file: ") + e.what());
  }
  return out;
}

std::string plot_csv(const Scenario & scenario, const RolloutSet * rollouts)
{
  std::ostringstream os;
  os.precision(17);
  os << "timestep,agent,x,y,heading,opacity_rank\n";
  // Logged trajectories get rank 0; rollouts rank 1.. by ascending ADE to the log.
  for (const AgentTrack & t : scenario.tracks) {
    for (std::size_t k = 0; k < t.states.size(); ++k) {
      const AgentState & s = t.states[k];
      os << static_cast<std::int64_t>(k) + t.start_step << ',' << t.agent_id << ',' << s.x << ',' << s.y << ','
         << s.heading << ",0\n";
    }
  }
  if (rollouts == nullptr) {
    return os.str();
  }
  const std::size_t nr = rollouts->rollouts.size();
  std::vector<double> ade(nr, 0.0);
  for (std::size_t r = 0; r < nr; ++r) {
    std::size_t count = 0;
    for (std::size_t a = 0; a < rollouts->agent_ids.size(); ++a) {
      const AgentTrack & t = scenario.tracks[scenario.track_index(rollouts->agent_ids[a])];
      const auto & traj = rollouts->rollouts[r].agents[a];
      for (std::size_t k = 0; k < traj.size() && t.history_len + k < t.states.size(); ++k) {
        ade[r] += (traj[k].position() - t.states[t.history_len + k].position()).norm();
        ++count;
      }
    }
    ade[r] /= static_cast<double>(std::max<std::size_t>(count, 1));
  }
  std::vector<std::size_t> order(nr);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ade[a] < ade[b]; });
  std::vector<std::size_t> rank(nr);
  for (std::size_t i = 0; i < nr; ++i) {
    rank[order[i]] = i + 1;
  }
  for (std::size_t r = 0; r < nr; ++r) {
    for (std::size_t a = 0; a < rollouts->agent_ids.size(); ++a) {
      const AgentTrack & t = scenario.tracks[scenario.track_index(rollouts->agent_ids[a])];
      const auto & traj = rollouts->rollouts[r].agents[a];
      for (std::size_t k = 0; k < traj.size(); ++k) {
        os << static_cast<std::int64_t>(t.history_len + k) + t.start_step << ',' << rollouts->agent_ids[a] << ','
           << traj[k].x << ',' << traj[k].y << ',' << traj[k].heading << ',' << rank[r] << '\n';
      }
    }
  }
  return os.str();
}

namespace
{
struct Manifest
{
  std::string verb;
  json inputs = json::array();
  json outputs = json::array();
  json seeds = json::object();
  json fingerprints = json::array();

  void input(const fs::path & p)
  {
    inputs.push_back({{"name", p.filename().string()},
      {"fnv", nn::fingerprint_hex(hash_string(read_text_file(p)))}});
  }
  void write(const fs::path & dir, const RunConfig & config)
  {
    write_text_file(dir / "effective_config.json", config.to_json().dump(1) + "\n");
    std::sort(outputs.begin(), outputs.end());
    write_text_file(dir / "manifest.json", json{{"verb", verb}, {"inputs", inputs}, {"outputs", outputs},
      {"seeds", seeds}, {"fingerprints", fingerprints}}.dump(1) + "\n");
  }
};

fs::path default_data_dir()
{
  const char * env = std::getenv(kDataDirEnv);
  return env != nullptr && *env != '\0' ? fs::path(env) : fs::path("data");
}

std::vector<fs::path> scenario_inputs(const std::string & data, const std::vector<std::string> & files)
{
  std::vector<fs::path> out;
  for (const auto & f : files) {
    out.emplace_back(f);
  }
  if (out.empty()) {
    out = list_scenario_files(data.empty() ? default_data_dir() : fs::path(data));
  }
  if (out.empty()) {
    throw ValidationError("no scenario files given");
  }
  return out;
}

std::string rollout_file_name(const std::string & scenario_id) { return scenario_id + ".rollouts.json"; }

struct Common
{
  std::string config_path;
  int jobs = 0;
};

RunConfig base_config(const Common & c)
{
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : RunConfig::load(c.config_path);
  if (c.jobs > 0) {
    omp_set_num_threads(c.jobs);
  }
  return cfg;
}

void add_common(CLI::App * sub, Common & c)
{
  sub->add_option("--config", c.config_path, "JSON run config; flags override its values")->check(CLI::ExistingFile);
  sub->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
}
}  // namespace

int cli_dispatch(const std::vector<std::string> & args, std::ostream & out, std::ostream & err)
{
  CLI::App app{"Closed-loop traffic agent simulator"};
  app.require_subcommand(1);
  Common common;

  // gen-data
  auto * gen = app.add_subcommand("gen-data", "Generate a synthetic scenario corpus");
  std::size_t gen_n = 0;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  add_common(gen, common);
  gen->add_option("--n", gen_n, "Scenario count, split 4:3:3 over straight/curve/intersection");
  gen->add_option("--seed", gen_seed, "Corpus seed");
  gen->add_option("--out", gen_out, "Output directory (default $AGENTSIM_DATA_DIR or ./data)");

  // fit-intents
  auto * fit = app.add_subcommand("fit-intents", "Fit intention points by k-means");
  std::string fit_data;
  std::vector<std::string> fit_files;
  std::string fit_out = "intentions.json";
  std::size_t fit_k = 0;
  add_common(fit, common);
  fit->add_option("--data", fit_data, "Scenario directory");
  fit->add_option("--scenario", fit_files, "Scenario files");
  fit->add_option("--out", fit_out, "Output table file");
  fit->add_option("--k", fit_k, "Intention points per category");

  // train
  auto * tr = app.add_subcommand("train", "Closed-loop training");
  std::string tr_data;
  std::vector<std::string> tr_files;
  std::string tr_intents;
  std::string tr_out = "run";
  std::string tr_preset;
  std::string tr_resume;
  std::size_t tr_epochs = 0;
  double tr_lr = 0.0;
  std::size_t tr_ckpt_every = 0;
  std::size_t tr_max_steps = 0;
  add_common(tr, common);
  tr->add_option("--data", tr_data, "Scenario directory");
  tr->add_option("--scenario", tr_files, "Scenario files");
  tr->add_option("--intents", tr_intents, "Intention-point table");
  tr->add_option("--out", tr_out, "Run directory");
  tr->add_option("--preset", tr_preset, "Model preset (small, large, tiny, micro)");
  tr->add_option("--epochs", tr_epochs, "Epoch count");
  tr->add_option("--lr", tr_lr, "Learning rate");
  tr->add_option("--checkpoint-every", tr_ckpt_every, "Checkpoint period in optimizer steps");
  tr->add_option("--max-steps", tr_max_steps, "Stop after this many optimizer steps");
  tr->add_option("--resume", tr_resume, "Training checkpoint to resume from")->check(CLI::ExistingFile);

  // simulate
  auto * sim = app.add_subcommand("simulate", "Run closed-loop rollouts");
  std::string sim_data;
  std::vector<std::string> sim_files;
  std::vector<std::string> sim_ckpts;
  std::string sim_policy = "model";
  std::string sim_world = "model";
  std::string sim_out = "rollouts";
  std::uint64_t sim_seed = 0;
  std::size_t sim_rollouts = 0;
  std::string sim_sampling;
  bool sim_serial = false;
  bool sim_csv = false;
  add_common(sim, common);
  sim->add_option("--data", sim_data, "Scenario directory");
  sim->add_option("--scenario", sim_files, "Scenario files");
  sim->add_option("--checkpoint,--ensemble", sim_ckpts, "Model checkpoint(s); several form an ensemble");
  sim->add_option("--policy", sim_policy, "ADV policy")->check(CLI::IsMember({"model", "log-replay", "constant-velocity"}));
  sim->add_option("--world", sim_world, "World agents")->check(CLI::IsMember({"model", "constant-velocity"}));
  sim->add_option("--out", sim_out, "Output directory");
  sim->add_option("--seed", sim_seed, "Master seed");
  sim->add_option("--rollouts", sim_rollouts, "Rollouts per scenario");
  sim->add_option("--sampling", sim_sampling, "max_likelihood or top_k_periodic");
  sim->add_flag("--serial", sim_serial, "Run rollouts serially");
  sim->add_flag("--csv", sim_csv, "Also write flat CSV");

  // evaluate
  auto * ev = app.add_subcommand("evaluate", "Score rollouts against logged futures");
  std::string ev_data;
  std::vector<std::string> ev_files;
  std::string ev_rollouts = "rollouts";
  std::string ev_out = "metrics";
  add_common(ev, common);
  ev->add_option("--data", ev_data, "Scenario directory");
  ev->add_option("--scenario", ev_files, "Scenario files");
  ev->add_option("--rollouts", ev_rollouts, "Directory of rollout files");
  ev->add_option("--out", ev_out, "Report directory");

  // inspect
  auto * ins = app.add_subcommand("inspect", "Summarize a scenario and its rollouts");
  std::string ins_scenario;
  std::string ins_rollouts;
  std::string ins_csv;
  ins->add_option("--scenario", ins_scenario, "Scenario file")->required();
  ins->add_option("--rollouts", ins_rollouts, "Rollout file");
  ins->add_option("--csv", ins_csv, "Plot CSV output path");

  const auto fail = [&](const char * kind, const std::string & message, int code) {
    err << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << std::endl;
    return code;
  };

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError & e) {
    return fail("usage", e.what(), kExitUsage);
  }

  try {
    if (gen->parsed()) {
      RunConfig cfg = base_config(common);
      if (gen_n > 0) {
        cfg.generator.curve = gen_n * 3 / 10;
        cfg.generator.four_way_intersection = gen_n * 3 / 10;
        cfg.generator.straight_road = gen_n - cfg.generator.curve - cfg.generator.four_way_intersection;
      }
      if (gen->count("--seed") != 0) {
        cfg.data_seed = gen_seed;
      }
      cfg.validate();
      const fs::path dir = gen_out.empty() ? default_data_dir() : fs::path(gen_out);
      fs::create_directories(dir);
      Manifest m{"gen-data"};
      m.seeds["data_seed"] = cfg.data_seed;
      for (const Scenario & sc : generate_synthetic_corpus(cfg.generator, cfg.data_seed)) {
        const std::string name = sc.scenario_id + ".json";
        write_scenario_file(dir / name, sc);
        m.outputs.push_back(name);
      }
      m.write(dir, cfg);
      out << "wrote " << cfg.generator.scenario_count() << " scenarios to " << dir.string() << "\n";
      return kExitOk;
    }

    if (fit->parsed()) {
      RunConfig cfg = base_config(common);
      if (fit_k > 0) {
        cfg.intention_k = fit_k;
      }
      cfg.validate();
      Manifest m{"fit-intents"};
      std::vector<Scenario> corpus;
      for (const auto & p : scenario_inputs(fit_data, fit_files)) {
        corpus.push_back(read_scenario_file(p, cfg.generator.agent_cap));
        m.input(p);
      }
      std::map<AgentCategory, IntentionPointSet> tables;
      for (AgentCategory c : {AgentCategory::vehicle, AgentCategory::pedestrian, AgentCategory::cyclist}) {
        if (intention_endpoints(corpus, c, cfg.model.horizon).empty()) {
          err << json{{"warning", "no tracks of category"}, {"category", to_string(c)}}.dump() << std::endl;
          continue;
        }
        IntentionPointSet s = fit_intention_points(corpus, c, cfg.intention_k, cfg.intention_seed, cfg.model.horizon);
        if (s.points.size() < s.requested_k) {
          err << json{{"warning", "k reduced to the distinct endpoint count"}, {"category", to_string(c)},
                   {"k", s.points.size()}}.dump()
              << std::endl;
        }
        out << to_string(c) << ": " << s.points.size() << " intention points\n";
        tables[c] = std::move(s);
      }
      const fs::path path(fit_out);
      const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
      fs::create_directories(dir);
      write_text_file(path, save_intention_tables(tables));
      m.seeds["intention_seed"] = cfg.intention_seed;
      m.outputs.push_back(path.filename().string());
      m.write(dir, cfg);
      return kExitOk;
    }

    if (tr->parsed()) {
      RunConfig cfg = base_config(common);
      if (!tr_preset.empty()) {
        cfg.model = ModelConfig::from_preset(tr_preset);
        // A preset fixes the architecture; mode count and decoder depth bound k and E.
        cfg.intention_k = std::min(cfg.intention_k, cfg.model.modes);
        cfg.rollout.reencode_period = std::min(cfg.rollout.reencode_period, cfg.model.decoder_layers);
      }
      if (tr_epochs > 0) {
        cfg.train.epochs = tr_epochs;
      }
      if (tr_lr > 0.0) {
        cfg.train.lr = tr_lr;
      }
      const fs::path dir(tr_out);
      fs::create_directories(dir);
      Manifest m{"train"};
      std::vector<Scenario> corpus;
      for (const auto & p : scenario_inputs(tr_data, tr_files)) {
        corpus.push_back(read_scenario_file(p, cfg.generator.agent_cap));
        m.input(p);
      }

      TrainOptions opt;
      opt.log_csv = dir / "train_log.csv";
      opt.checkpoint_dir = dir / "checkpoints";
      opt.checkpoint_every = tr_ckpt_every;
      opt.stop_after_steps = tr_max_steps;
      std::optional<SimModel> model;
      if (!tr_resume.empty()) {
        ResumeState rs = load_training_checkpoint(tr_resume);
        cfg.model = rs.model.config();
        cfg.train = rs.config;
        opt.resume = rs.progress;
        model.emplace(std::move(rs.model));
        m.input(tr_resume);
      } else {
        cfg.validate();
        if (tr_intents.empty()) {
          throw ValidationError("train needs --intents (or --resume)");
        }
        model.emplace(cfg.model, cfg.init_seed);
        for (const auto & [cat, set] : load_intention_tables(read_text_file(tr_intents))) {
          model->set_intention_points(set);
        }
        m.input(tr_intents);
        fs::remove(*opt.log_csv);
      }
      const TrainResult res = train(*model, corpus, cfg.train, opt);
      model->save(dir / "model.bin", true, {{"config", cfg.train.to_json()}, {"progress", res.progress.to_json()}});
      m.seeds["init_seed"] = cfg.init_seed;
      m.seeds["train_seed"] = cfg.train.seed;
      m.fingerprints.push_back(model->fingerprint());
      m.outputs.push_back("model.bin");
      m.outputs.push_back("train_log.csv");
      m.write(dir, cfg);
      out << "trained " << res.progress.step << " steps";
      if (!res.log.empty()) {
        out << ", last loss " << res.log.back().loss.total;
      }
      out << "\n";
      return kExitOk;
    }

    if (sim->parsed()) {
      RunConfig cfg = base_config(common);
      if (sim->count("--seed") != 0) {
        cfg.rollout.seed = sim_seed;
      }
      if (sim_rollouts > 0) {
        cfg.rollout.rollouts = sim_rollouts;
      }
      if (!sim_sampling.empty()) {
        cfg.rollout.sampling.mode = parse_sampling_mode(sim_sampling);
      }
      if (sim_serial) {
        cfg.rollout.parallel = false;
      }
      const WorldModel world = sim_world == "model" ? WorldModel::model : WorldModel::constant_velocity;
      const bool needs_model = world == WorldModel::model || sim_policy == "model";
      if (needs_model && sim_ckpts.empty()) {
        throw ValidationError("simulate needs --checkpoint for model-driven agents");
      }
      Manifest m{"simulate"};
      std::vector<SimModel> models;
      for (const auto & c : sim_ckpts) {
        models.push_back(SimModel::load(c));
        m.input(c);
        m.fingerprints.push_back(models.back().fingerprint());
      }
      std::vector<const SimModel *> ptrs;
      for (const auto & mm : models) {
        ptrs.push_back(&mm);
      }
      if (!models.empty()) {
        cfg.model = models.front().config();
      }
      cfg.validate();
      const auto policy = make_adv_policy(sim_policy);
      const fs::path dir(sim_out);
      fs::create_directories(dir);
      for (const auto & p : scenario_inputs(sim_data, sim_files)) {
        const Scenario sc = read_scenario_file(p, cfg.generator.agent_cap);
        m.input(p);
        const RolloutSet set = run_simulation_set(sc, ptrs, *policy, cfg.rollout, world);
        const std::string name = rollout_file_name(sc.scenario_id);
        write_text_file(dir / name, save_rollout_set(set));
        m.outputs.push_back(name);
        if (sim_csv) {
          write_text_file(dir / (sc.scenario_id + ".rollouts.csv"), rollout_set_to_csv(set));
          m.outputs.push_back(sc.scenario_id + ".rollouts.csv");
        }
        out << sc.scenario_id << ": " << set.rollouts.size() << " rollouts\n";
      }
      m.seeds["rollout_seed"] = cfg.rollout.seed;
      m.seeds["policy"] = sim_policy;
      m.seeds["world"] = sim_world;
      m.write(dir, cfg);
      return kExitOk;
    }

    if (ev->parsed()) {
      RunConfig cfg = base_config(common);
      Manifest m{"evaluate"};
      std::vector<MetricBundle> bundles;
      for (const auto & p : scenario_inputs(ev_data, ev_files)) {
        const Scenario sc = read_scenario_file(p, cfg.generator.agent_cap);
        const fs::path rp = fs::path(ev_rollouts) / rollout_file_name(sc.scenario_id);
        if (!fs::exists(rp)) {
          throw ValidationError("missing rollout file " + rp.string());
        }
        const RolloutSet set = load_rollout_set(read_text_file(rp), sc);
        m.input(p);
        m.input(rp);
        bundles.push_back(evaluate(sc, set));
      }
      const MetricBundle mean = corpus_mean(bundles);
      const fs::path dir(ev_out);
      fs::create_directories(dir);
      write_text_file(dir / "metrics.json", metrics_report(bundles, mean).dump(1) + "\n");
      write_text_file(dir / "metrics.csv", metrics_csv(bundles, mean));
      m.outputs.push_back("metrics.json");
      m.outputs.push_back("metrics.csv");
      m.write(dir, cfg);
      out << "meta " << mean.meta << " minADE " << mean.min_ade << " offroad " << mean.offroad_rate
          << " collision " << mean.collision_rate << "\n";
      return kExitOk;
    }

    if (ins->parsed()) {
      const Scenario sc = read_scenario_file(ins_scenario);
      std::optional<RolloutSet> set;
      if (!ins_rollouts.empty()) {
        set = load_rollout_set(read_text_file(ins_rollouts), sc);
      }
      out << "scenario " << sc.scenario_id << "  adv " << sc.adv_id << "  steps " << sc.duration_steps << "\n";
      std::array<std::size_t, kNumPolylineTypes> types{};
      for (const auto & pl : sc.polylines) {
        ++types[static_cast<std::size_t>(pl.type)];
      }
      out << "polylines";
      for (std::size_t t = 0; t < kNumPolylineTypes; ++t) {
        out << "  " << to_string(static_cast<PolylineType>(t)) << "=" << types[t];
      }
      out << "\ndrivable area vertices " << sc.drivable_area.size() << "\n";
      for (const auto & t : sc.tracks) {
        const AgentState & s0 = t.states.front();
        const AgentState & sh = t.states[t.history_len - 1];
        out << "  " << t.agent_id << "  " << to_string(s0.category) << "  " << s0.length << "x" << s0.width
            << "  history " << t.history_len << "/" << t.states.size() << "  speed@split "
            << std::hypot(sh.vx, sh.vy) << "\n";
      }
      if (set) {
        const MetricBundle b = evaluate(sc, *set);
        out << "rollouts " << set->rollouts.size() << "  fingerprint " << set->model_fingerprint << "  minADE "
            << b.min_ade << "  meta " << b.meta << "\n";
      }
      if (!ins_csv.empty()) {
        write_text_file(ins_csv, plot_csv(sc, set ? &*set : nullptr));
      }
      return kExitOk;
    }
  } catch (const ValidationError & e) {
    return fail("validation", e.what(), kExitValidation);
  } catch (const json::exception & e) {
    return fail("validation", e.what(), kExitValidation);
  } catch (const std::exception & e) {
    return fail("runtime", e.what(), kExitRuntime);
  }
  return fail("usage", "no verb given", kExitUsage);
}
}  // namespace agentsim
