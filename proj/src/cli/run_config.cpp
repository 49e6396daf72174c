#include "agentsim/cli/run_config.hpp"

#include "agentsim/error.hpp"
#include "agentsim/scenario/io.hpp"

namespace agentsim
{
namespace
{
template <class T>
T get(const nlohmann::json & v, const std::string & key)
{
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception &) {
    throw ValidationError("config key '" + key + "' has the wrong type");
  }
}

SpeedRange range_from(const nlohmann::json & v, const std::string & key)
{
  if (!v.is_array() || v.size() != 2) {
    throw ValidationError("config key '" + key + "' must be [min, max]");
  }
  return {get<double>(v[0], key), get<double>(v[1], key)};
}
}  // namespace

nlohmann::json generator_to_json(const GeneratorConfig & g)
{
  return {{"straight_road", g.straight_road}, {"curve", g.curve}, {"four_way_intersection", g.four_way_intersection},
    {"min_agents", g.min_agents}, {"max_agents", g.max_agents}, {"agent_cap", g.agent_cap},
    {"vehicle_speed", {g.vehicle_speed.min, g.vehicle_speed.max}},
    {"cyclist_speed", {g.cyclist_speed.min, g.cyclist_speed.max}},
    {"pedestrian_speed", {g.pedestrian_speed.min, g.pedestrian_speed.max}},
    {"pedestrian_fraction", g.pedestrian_fraction}, {"cyclist_fraction", g.cyclist_fraction},
    {"varied_behaviors", g.varied_behaviors}, {"random_pose", g.random_pose}};
}

GeneratorConfig generator_from_json(const nlohmann::json & j)
{
  GeneratorConfig g;
  for (const auto & [k, v] : j.items()) {
    const std::string key = "generator." + k;
    if (k == "straight_road") {
      g.straight_road = get<std::size_t>(v, key);
    } else if (k == "curve") {
      g.curve = get<std::size_t>(v, key);
    } else if (k == "four_way_intersection") {
      g.four_way_intersection = get<std::size_t>(v, key);
    } else if (k == "min_agents") {
      g.min_agents = get<std::size_t>(v, key);
    } else if (k == "max_agents") {
      g.max_agents = get<std::size_t>(v, key);
    } else if (k == "agent_cap") {
      g.agent_cap = get<std::size_t>(v, key);
    } else if (k == "vehicle_speed") {
      g.vehicle_speed = range_from(v, key);
    } else if (k == "cyclist_speed") {
      g.cyclist_speed = range_from(v, key);
    } else if (k == "pedestrian_speed") {
      g.pedestrian_speed = range_from(v, key);
    } else if (k == "pedestrian_fraction") {
      g.pedestrian_fraction = get<double>(v, key);
    } else if (k == "cyclist_fraction") {
      g.cyclist_fraction = get<double>(v, key);
    } else if (k == "varied_behaviors") {
      g.varied_behaviors = get<bool>(v, key);
    } else if (k == "random_pose") {
      g.random_pose = get<bool>(v, key);
    } else {
      throw ValidationError("unknown config key '" + key + "'");
    }
  }
  return g;
}

void RunConfig::validate() const
{
  model.validate();
  rollout.validate(model.decoder_layers);
  train.validate();
  generator.validate();
  // Tables may hold more points than a model has modes; the model keeps the first model.modes.
  if (intention_k < 1) {
    throw ValidationError("intention_k must be at least 1");
  }
}

nlohmann::json RunConfig::to_json() const
{
  return {{"model", model.to_json()}, {"rollout", rollout.to_json()}, {"train", train.to_json()},
    {"generator", generator_to_json(generator)}, {"intention_k", intention_k}, {"intention_seed", intention_seed},
    {"data_seed", data_seed}, {"init_seed", init_seed}};
}

RunConfig RunConfig::from_json(const nlohmann::json & j)
{
  if (!j.is_object()) {
    throw ValidationError("config must be a JSON object");
  }
  RunConfig c;
  try {
    for (const auto & [k, v] : j.items()) {
      if (k == "model") {
        c.model = ModelConfig::from_json(v);
      } else if (k == "rollout") {
        c.rollout = RolloutConfig::from_json(v);
      } else if (k == "train") {
        c.train = TrainConfig::from_json(v);
      } else if (k == "generator") {
        c.generator = generator_from_json(v);
      } else if (k == "intention_k") {
        c.intention_k = get<std::size_t>(v, k);
      } else if (k == "intention_seed") {
        c.intention_seed = get<std::uint64_t>(v, k);
      } else if (k == "data_seed") {
        c.data_seed = get<std::uint64_t>(v, k);
      } else if (k == "init_seed") {
        c.init_seed = get<std::uint64_t>(v, k);
      } else {
        throw ValidationError("unknown config key '" + k + "'");
      }
    }
  } catch (const nlohmann::json::exception & e) {
    throw ValidationError(std::string("config has the wrong type: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path & path)
{
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error & e) {
    throw ValidationError("malformed config " + path.string() + ": " + e.what());
  }
  return from_json(j);
}
}  // namespace agentsim
