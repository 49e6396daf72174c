#ifndef AGENTSIM__SCENARIO__GENERATOR_HPP_
#define AGENTSIM__SCENARIO__GENERATOR_HPP_

#include "agentsim/rng.hpp"
#include "agentsim/scenario/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace agentsim
{
enum class ScenarioTemplate { straight_road, curve, four_way_intersection };

std::string_view to_string(ScenarioTemplate t);

struct SpeedRange
{
  double min = 0.0;
  double max = 0.0;
};

struct GeneratorConfig
{
  std::size_t straight_road = 4;
  std::size_t curve = 3;
  std::size_t four_way_intersection = 3;
  std::size_t min_agents = 3;
  std::size_t max_agents = 8;
  std::size_t agent_cap = kDefaultAgentCap;
  SpeedRange vehicle_speed{5.0, 14.0};
  SpeedRange cyclist_speed{3.0, 6.0};
  SpeedRange pedestrian_speed{0.8, 1.6};
  double pedestrian_fraction = 0.15;
  double cyclist_fraction = 0.1;
  /// false: every agent drives at constant speed (no speed changes, no yields).
  bool varied_behaviors = true;
  /// Random rotation and translation of each scene.
  bool random_pose = true;

  std::size_t scenario_count() const { return straight_road + curve + four_way_intersection; }
  /// Throws ValidationError when infeasible.
  void validate() const;
};

/// One scenario of the given template; pure in (type, config, rng state).
Scenario generate_scenario(ScenarioTemplate type, const GeneratorConfig & config, Rng & rng, std::string scenario_id);

/// Deterministic corpus: scenario i uses its own stream derived from (seed, i).
std::vector<Scenario> generate_synthetic_corpus(const GeneratorConfig & config, std::uint64_t seed);
}  // namespace agentsim

#endif  // AGENTSIM__SCENARIO__GENERATOR_HPP_
