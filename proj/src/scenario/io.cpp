#include "agentsim/scenario/io.hpp"

#include "agentsim/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace agentsim
{
using nlohmann::json;

namespace
{
const json & field(const json & obj, const char * key)
{
  if (!obj.is_object() || !obj.contains(key)) {
    throw ValidationError(std::string("missing field '") + key + "'");
  }
  return obj.at(key);
}

double number(const json & obj, const char * key)
{
  const json & v = field(obj, key);
  if (!v.is_number()) {
    throw ValidationError(std::string("field '") + key + "' must be a number");
  }
  return v.get<double>();
}

std::string text(const json & obj, const char * key)
{
  const json & v = field(obj, key);
  if (!v.is_string()) {
    throw ValidationError(std::string("field '") + key + "' must be a string");
  }
  return v.get<std::string>();
}

Vec2 point(const json & p)
{
  if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
    throw ValidationError("points must be [x, y] pairs");
  }
  return {p[0].get<double>(), p[1].get<double>()};
}

json point_json(const Vec2 & p) { return json::array({p.x, p.y}); }

std::uint64_t parse_u64(const json & obj, const char * key)
{
  const json & v = field(obj, key);
  if (!v.is_number_unsigned()) {
    throw ValidationError(std::string("field '") + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}
}  // namespace

Scenario load_scenario(std::string_view bytes, std::size_t agent_cap)
{
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error & e) {
    throw ValidationError(std::string("malformed scenario document: ") + e.what());
  }
  if (!doc.is_object()) {
    throw ValidationError("scenario document must be a JSON object");
  }
  const json & version = field(doc, "schema_version");
  if (!version.is_number_integer() || version.get<int>() != kScenarioSchemaVersion) {
    throw ValidationError("unsupported schema_version");
  }
  if (std::abs(number(doc, "dt") - kDt) > 1e-9) {
    throw ValidationError("dt must be 0.1");
  }
  Scenario s;
  s.scenario_id = text(doc, "scenario_id");
  if (!doc.contains("adv_id")) {
    throw ValidationError("missing adv_id");
  }
  s.adv_id = text(doc, "adv_id");
  if (doc.contains("duration_steps")) {
    s.duration_steps = field(doc, "duration_steps").get<std::size_t>();
  }
  for (const auto & p : field(doc, "drivable_area")) {
    s.drivable_area.push_back(point(p));
  }
  for (const auto & pl : field(doc, "polylines")) {
    std::vector<Vec2> pts;
    for (const auto & p : field(pl, "points")) {
      pts.push_back(point(p));
    }
    try {
      s.polylines.push_back(MapPolyline::make(std::move(pts), parse_polyline_type(text(pl, "type"))));
    } catch (const ValidationError &) {
      throw;
    } catch (const Error & e) {
      throw ValidationError(e.what());
    }
  }
  for (const auto & tj : field(doc, "tracks")) {
    AgentTrack t;
    t.agent_id = text(tj, "agent_id");
    const AgentCategory category = parse_category(text(tj, "category"));
    const double length = number(tj, "length");
    const double width = number(tj, "width");
    t.history_len = field(tj, "history_len").get<std::size_t>();
    const json & states = field(tj, "states");
    if (!states.is_array() || states.empty()) {
      throw ValidationError("track " + t.agent_id + " has no states");
    }
    double t0 = 0.0;
    for (std::size_t i = 0; i < states.size(); ++i) {
      const json & sj = states[i];
      const double ts = number(sj, "t");
      if (i == 0) {
        t0 = ts;
        t.start_step = std::llround(ts / kDt);
        if (std::abs(static_cast<double>(t.start_step) * kDt - ts) > 1e-6) {
          throw ValidationError("track " + t.agent_id + " starts off the 0.1 s grid");
        }
      } else if (std::abs(ts - (t0 + static_cast<double>(i) * kDt)) > 1e-6) {
        throw ValidationError("track " + t.agent_id + ": non-uniform timestep at state " + std::to_string(i));
      }
      const double heading = number(sj, "heading");
      if (!(heading > -M_PI && heading <= M_PI)) {
        throw ValidationError("track " + t.agent_id + ": heading outside (-pi, pi]");
      }
      const json & valid = field(sj, "valid");
      if (!valid.is_boolean()) {
        throw ValidationError("field 'valid' must be a boolean");
      }
      t.states.push_back(make_state(number(sj, "x"), number(sj, "y"), number(sj, "z"), heading, number(sj, "vx"),
        number(sj, "vy"), length, width, category, valid.get<bool>()));
    }
    s.tracks.push_back(std::move(t));
  }
  validate_scenario(s, agent_cap);
  return s;
}

std::string save_scenario(const Scenario & s)
{
  json doc;
  doc["schema_version"] = kScenarioSchemaVersion;
  doc["dt"] = kDt;
  doc["scenario_id"] = s.scenario_id;
  doc["adv_id"] = s.adv_id;
  doc["duration_steps"] = s.duration_steps;
  doc["drivable_area"] = json::array();
  for (const auto & p : s.drivable_area) {
    doc["drivable_area"].push_back(point_json(p));
  }
  doc["polylines"] = json::array();
  for (const auto & pl : s.polylines) {
    json pts = json::array();
    for (const auto & p : pl.points) {
      pts.push_back(point_json(p));
    }
    doc["polylines"].push_back({{"type", std::string(to_string(pl.type))}, {"points", std::move(pts)}});
  }
  doc["tracks"] = json::array();
  for (const auto & t : s.tracks) {
    json states = json::array();
    for (std::size_t i = 0; i < t.states.size(); ++i) {
      const auto & st = t.states[i];
      states.push_back({{"t", t.timestamp(i)}, {"x", st.x}, {"y", st.y}, {"z", st.z}, {"heading", st.heading},
        {"vx", st.vx}, {"vy", st.vy}, {"valid", st.valid}});
    }
    const auto & first = t.states.front();
    doc["tracks"].push_back({{"agent_id", t.agent_id}, {"category", std::string(to_string(first.category))},
      {"length", first.length}, {"width", first.width}, {"history_len", t.history_len},
      {"states", std::move(states)}});
  }
  return doc.dump(1) + "\n";
}

std::string read_text_file(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path & path, std::string_view text)
{
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error("cannot write " + tmp.string());
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
      throw Error("short write to " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

Scenario read_scenario_file(const std::filesystem::path & path, std::size_t agent_cap)
{
  try {
    return load_scenario(read_text_file(path), agent_cap);
  } catch (const ValidationError & e) {
    throw ValidationError(path.filename().string() + ": " + e.what());
  }
}

void write_scenario_file(const std::filesystem::path & path, const Scenario & scenario)
{
  write_text_file(path, save_scenario(scenario));
}

std::vector<std::filesystem::path> list_scenario_files(const std::filesystem::path & dir)
{
  if (!std::filesystem::is_directory(dir)) {
    throw ValidationError("not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> out;
  for (const auto & e : std::filesystem::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    // Run bookkeeping files live beside the scenarios.
    if (e.is_regular_file() && e.path().extension() == ".json" && name != "manifest.json" &&
        name != "effective_config.json") {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Scenario> read_scenario_dir(const std::filesystem::path & dir, std::size_t agent_cap)
{
  std::vector<Scenario> out;
  for (const auto & p : list_scenario_files(dir)) {
    out.push_back(read_scenario_file(p, agent_cap));
  }
  return out;
}

std::string save_rollout_set(const RolloutSet & set)
{
  json doc;
  doc["scenario_id"] = set.scenario_id;
  doc["master_seed"] = set.master_seed;
  doc["model_fingerprint"] = set.model_fingerprint;
  doc["agent_ids"] = set.agent_ids;
  doc["rollouts"] = json::array();
  for (const auto & r : set.rollouts) {
    json agents = json::array();
    for (const auto & traj : r.agents) {
      json steps = json::array();
      for (const auto & s : traj) {
        steps.push_back(json::array({s.x, s.y, s.z, s.heading}));
      }
      agents.push_back(std::move(steps));
    }
    doc["rollouts"].push_back({{"seed", r.seed}, {"model_fingerprint", r.model_fingerprint}, {"states", agents}});
  }
  return doc.dump() + "\n";
}

RolloutSet load_rollout_set(std::string_view bytes, const Scenario & scenario)
{
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error & e) {
    throw ValidationError(std::string("malformed rollout document: ") + e.what());
  }
  RolloutSet set;
  set.scenario_id = text(doc, "scenario_id");
  if (set.scenario_id != scenario.scenario_id) {
    throw ValidationError("rollout file is for scenario " + set.scenario_id + ", not " + scenario.scenario_id);
  }
  set.master_seed = parse_u64(doc, "master_seed");
  set.model_fingerprint = text(doc, "model_fingerprint");
  set.agent_ids = field(doc, "agent_ids").get<std::vector<std::string>>();
  std::vector<const AgentState *> templates;
  for (const auto & id : set.agent_ids) {
    templates.push_back(&scenario.tracks.at(scenario.track_index(id)).states.front());
  }
  for (const auto & rj : field(doc, "rollouts")) {
    Rollout r;
    r.seed = parse_u64(rj, "seed");
    r.model_fingerprint = text(rj, "model_fingerprint");
    const json & agents = field(rj, "states");
    if (agents.size() != set.agent_ids.size()) {
      throw ValidationError("rollout agent count does not match agent_ids");
    }
    for (std::size_t a = 0; a < agents.size(); ++a) {
      std::vector<AgentState> traj;
      for (const auto & sj : agents[a]) {
        if (!sj.is_array() || sj.size() != 4) {
          throw ValidationError("rollout states must be [x, y, z, heading]");
        }
        const AgentState & tpl = *templates[a];
        traj.push_back(make_state(sj[0].get<double>(), sj[1].get<double>(), sj[2].get<double>(),
          sj[3].get<double>(), 0.0, 0.0, tpl.length, tpl.width, tpl.category));
      }
      for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
        traj[k + 1].vx = (traj[k + 1].x - traj[k].x) / kDt;
        traj[k + 1].vy = (traj[k + 1].y - traj[k].y) / kDt;
      }
      r.agents.push_back(std::move(traj));
    }
    set.rollouts.push_back(std::move(r));
  }
  validate_rollout_set(set, set.rollouts.size(), set.rollouts.empty() || set.rollouts[0].agents.empty() ? 0 : set.rollouts[0].agents[0].size());
  return set;
}

std::string rollout_set_to_csv(const RolloutSet & set)
{
  std::ostringstream out;
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "scenario_id,rollout,agent_id,step,x,y,z,heading\n";
  for (std::size_t r = 0; r < set.rollouts.size(); ++r) {
    for (std::size_t a = 0; a < set.agent_ids.size(); ++a) {
      const auto & traj = set.rollouts[r].agents[a];
      for (std::size_t k = 0; k < traj.size(); ++k) {
        const auto & s = traj[k];
        out << set.scenario_id << ',' << r << ',' << set.agent_ids[a] << ',' << k << ',' << s.x << ',' << s.y << ','
            << s.z << ',' << s.heading << '\n';
      }
    }
  }
  return out.str();
}
}  // namespace agentsim
