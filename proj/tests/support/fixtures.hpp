#ifndef AGENTSIM__TESTS__FIXTURES_HPP_
#define AGENTSIM__TESTS__FIXTURES_HPP_

#include "agentsim/model/sim_model.hpp"
#include "agentsim/scenario/generator.hpp"

#include <cmath>

namespace agentsim::testing
{
/// Vehicle-only corpus with a fixed agent count.
inline std::vector<Scenario> vehicle_corpus(std::size_t n, std::size_t agents, std::uint64_t seed, bool varied = true)
{
  GeneratorConfig g;
  g.straight_road = n - n / 2;
  g.curve = n / 2;
  g.four_way_intersection = 0;
  g.min_agents = agents;
  g.max_agents = agents;
  g.pedestrian_fraction = 0.0;
  g.cyclist_fraction = 0.0;
  g.varied_behaviors = varied;
  return generate_synthetic_corpus(g, seed);
}

/// Forward fan of points, enough for any category.
inline void set_fan_intentions(SimModel & model)
{
  for (AgentCategory c : {AgentCategory::vehicle, AgentCategory::pedestrian, AgentCategory::cyclist}) {
    IntentionPointSet s;
    s.category = c;
    for (std::size_t i = 0; i < model.config().modes; ++i) {
      const double a = -0.6 + 1.2 * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(1, model.config().modes - 1));
      const double r = 3.0 + static_cast<double>(i % 3) * 3.0;
      s.points.push_back({r * std::cos(a), r * std::sin(a)});
    }
    s.requested_k = s.points.size();
    model.set_intention_points(s);
  }
}

/// The micro preset with a full 10-step horizon, fan intention points attached.
inline SimModel micro_model(std::uint64_t seed, std::size_t horizon = 10)
{
  ModelConfig c = ModelConfig::from_preset("micro");
  c.horizon = horizon;
  SimModel m(c, seed);
  set_fan_intentions(m);
  return m;
}
}  // namespace agentsim::testing

#endif  // AGENTSIM__TESTS__FIXTURES_HPP_
