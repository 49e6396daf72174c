#include "agentsim/metrics/scoring.hpp"

#include "agentsim/error.hpp"
#include "agentsim/metrics/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace agentsim
{
std::size_t BinEdges::bin_of(double value) const
{
  const double width = (hi - lo) / static_cast<double>(bins);
  const double pos = std::floor((value - lo) / width);
  if (!(pos > 0.0)) {  // also catches -inf
    return 0;
  }
  return std::min(static_cast<std::size_t>(std::min(pos, static_cast<double>(bins))), bins - 1);
}

FeatureHistogram FeatureHistogram::build(std::span<const double> values, const BinEdges & edges, double epsilon)
{
  FeatureHistogram h{edges, std::vector<double>(edges.bins, 0.0), epsilon};
  for (double v : values) {
    require(!std::isnan(v), "histogram value is NaN");
    h.counts[edges.bin_of(v)] += 1.0;
  }
  return h;
}

double FeatureHistogram::probability(std::size_t bin) const
{
  double total = 0.0;
  for (double c : counts) {
    total += c;
  }
  return (counts.at(bin) + epsilon) / (total + epsilon * static_cast<double>(counts.size()));
}

double histogram_likelihood_score(std::span<const double> simulated, double logged, const BinEdges & edges, double epsilon)
{
  // +inf is a legitimate TTC value (no conflict) and lands in the last bin.
  if (std::isnan(logged) || logged == -std::numeric_limits<double>::infinity()) {
    throw ValidationError("histogram_likelihood_score: logged value is not finite");
  }
  const FeatureHistogram h = FeatureHistogram::build(simulated, edges, epsilon);
  const double cmax = *std::max_element(h.counts.begin(), h.counts.end());
  return (h.counts[edges.bin_of(logged)] + epsilon) / (cmax + epsilon);
}

std::string_view to_string(Component c)
{
  static constexpr std::array<const char *, kNumComponents> names = {"linear_speed", "linear_accel", "angular_speed",
    "angular_accel", "dist_to_obj", "collision", "ttc", "dist_to_road_edge", "offroad"};
  return names[static_cast<std::size_t>(c)];
}

const BinEdges & bin_edges(Component c)
{
  static const std::array<BinEdges, kNumComponents> edges = {{
    {0.0, 30.0, 30},    // linear speed [m/s]
    {-10.0, 10.0, 20},  // linear accel [m/s^2]
    {-3.0, 3.0, 30},    // angular speed [rad/s]
    {-10.0, 10.0, 20},  // angular accel [rad/s^2]
    {0.0, 50.0, 25},    // distance to nearest object [m]
    {-0.5, 1.5, 2},     // collision flag
    {0.0, 5.0, 10},     // TTC [s]; no conflict -> last bin
    {0.0, 20.0, 20},    // distance to road edge [m]
    {-0.5, 1.5, 2},     // offroad flag
  }};
  return edges[static_cast<std::size_t>(c)];
}

double realism_aggregate(const std::array<double, kNumComponents> & comp, const RealismWeights & w)
{
  const double total = w.kinematic + w.interactive + w.map;
  if (!(total > 0.0) || w.kinematic < 0.0 || w.interactive < 0.0 || w.map < 0.0) {
    throw ValidationError("realism weights must be non-negative with a positive sum");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    s += w.kinematic / 4.0 * comp[i];
  }
  for (std::size_t i = 4; i < 7; ++i) {
    s += w.interactive / 3.0 * comp[i];
  }
  for (std::size_t i = 7; i < 9; ++i) {
    s += w.map / 2.0 * comp[i];
  }
  return s / total;
}

nlohmann::json MetricBundle::to_json() const
{
  nlohmann::json j;
  j["scenario_id"] = scenario_id;
  for (std::size_t i = 0; i < kNumComponents; ++i) {
    j[std::string(to_string(static_cast<Component>(i)))] = components[i];
  }
  j["min_ade"] = min_ade;
  j["meta"] = meta;
  j["collision_rate"] = collision_rate;
  j["offroad_rate"] = offroad_rate;
  j["agents"] = agents;
  return j;
}

double min_ade(const std::vector<std::vector<std::vector<AgentState>>> & rollouts,
  const std::vector<std::vector<AgentState>> & logged)
{
  if (rollouts.empty() || logged.empty()) {
    throw ValidationError("min_ade: empty input");
  }
  double sum = 0.0;
  for (std::size_t a = 0; a < logged.size(); ++a) {
    const std::size_t steps = logged[a].size();
    if (steps == 0) {
      throw ValidationError("min_ade: empty logged trajectory");
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto & r : rollouts) {
      if (r.size() != logged.size() || r[a].size() != steps) {
        throw ValidationError("min_ade: rollout shape does not match the logged future");
      }
      double ade = 0.0;
      for (std::size_t t = 0; t < steps; ++t) {
        ade += (r[a][t].position() - logged[a][t].position()).norm();
      }
      best = std::min(best, ade / static_cast<double>(steps));
    }
    sum += best;
  }
  return sum / static_cast<double>(logged.size());
}

namespace
{
// Per-rollout features for all agents of the set.
struct RolloutFeatures
{
  std::vector<KinematicFeatures> kin;
  InteractiveFeatures inter;
  MapFeatures map;
};

RolloutFeatures features_of(const std::vector<std::vector<AgentState>> & agents, const Scenario & s)
{
  RolloutFeatures f;
  for (const auto & traj : agents) {
    f.kin.push_back(kinematic_features(traj));
  }
  f.inter = interactive_features(agents);
  f.map = map_features(agents, s.drivable_area);
  return f;
}

const std::vector<double> & kin_series(const KinematicFeatures & k, std::size_t c)
{
  switch (c) {
    case 0:
      return k.linear_speed;
    case 1:
      return k.linear_accel;
    case 2:
      return k.angular_speed;
    default:
      return k.angular_accel;
  }
}

double any_of(const std::vector<bool> & v) { return std::find(v.begin(), v.end(), true) != v.end() ? 1.0 : 0.0; }
}  // namespace

MetricBundle evaluate(const Scenario & scenario, const RolloutSet & set, const RealismWeights & weights)
{
  require(!set.rollouts.empty(), "evaluate: empty rollout set");
  if (set.scenario_id != scenario.scenario_id) {
    throw ValidationError("evaluate: rollout set is for " + set.scenario_id);
  }
  // Logged future aligned with the rollout agents.
  std::vector<std::vector<AgentState>> logged;
  std::vector<std::size_t> scored;
  for (std::size_t a = 0; a < set.agent_ids.size(); ++a) {
    const auto & track = scenario.tracks[scenario.track_index(set.agent_ids[a])];
    const std::size_t steps = set.rollouts[0].agents[a].size();
    if (track.history_len + steps > track.states.size()) {
      throw ValidationError("evaluate: logged track " + track.agent_id + " is shorter than the rollout");
    }
    const auto first = track.states.begin() + static_cast<std::ptrdiff_t>(track.history_len);
    logged.emplace_back(first, first + static_cast<std::ptrdiff_t>(steps));
    if (set.agent_ids[a] != scenario.adv_id) {
      scored.push_back(a);
    }
  }
  require(!scored.empty(), "evaluate: no world agents in the rollout set");

  const RolloutFeatures ref = features_of(logged, scenario);
  std::vector<RolloutFeatures> sim;
  sim.reserve(set.rollouts.size());
  for (const auto & r : set.rollouts) {
    sim.push_back(features_of(r.agents, scenario));
  }

  MetricBundle b;
  b.scenario_id = scenario.scenario_id;
  b.agents = scored.size();
  std::vector<double> values(sim.size());
  auto score_series = [&](Component c, auto get) {
    // get(features, agent) -> const std::vector<double>&
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t a : scored) {
      const auto & logged_series = get(ref, a);
      for (std::size_t t = 0; t < logged_series.size(); ++t) {
        for (std::size_t r = 0; r < sim.size(); ++r) {
          values[r] = get(sim[r], a)[t];
        }
        total += histogram_likelihood_score(values, logged_series[t], bin_edges(c));
        ++count;
      }
    }
    b.components[static_cast<std::size_t>(c)] = total / static_cast<double>(count);
  };
  for (std::size_t c = 0; c < 4; ++c) {
    score_series(static_cast<Component>(c),
      [c](const RolloutFeatures & f, std::size_t a) -> const std::vector<double> & { return kin_series(f.kin[a], c); });
  }
  score_series(Component::dist_to_obj,
    [](const RolloutFeatures & f, std::size_t a) -> const std::vector<double> & { return f.inter.dist_to_obj[a]; });
  score_series(
    Component::ttc, [](const RolloutFeatures & f, std::size_t a) -> const std::vector<double> & { return f.inter.ttc[a]; });
  score_series(Component::dist_to_road_edge,
    [](const RolloutFeatures & f, std::size_t a) -> const std::vector<double> & { return f.map.dist_to_road_edge[a]; });

  // Boolean events are scored once per agent episode.
  auto score_flag = [&](Component c, auto get) {
    double total = 0.0;
    double rate = 0.0;
    for (std::size_t a : scored) {
      for (std::size_t r = 0; r < sim.size(); ++r) {
        values[r] = any_of(get(sim[r], a));
        rate += values[r];
      }
      total += histogram_likelihood_score(values, any_of(get(ref, a)), bin_edges(c));
    }
    b.components[static_cast<std::size_t>(c)] = total / static_cast<double>(scored.size());
    return rate / static_cast<double>(scored.size() * sim.size());
  };
  b.collision_rate = score_flag(Component::collision,
    [](const RolloutFeatures & f, std::size_t a) -> const std::vector<bool> & { return f.inter.collision[a]; });
  b.offroad_rate = score_flag(Component::offroad,
    [](const RolloutFeatures & f, std::size_t a) -> const std::vector<bool> & { return f.map.offroad[a]; });

  std::vector<std::vector<std::vector<AgentState>>> sim_world;
  std::vector<std::vector<AgentState>> logged_world;
  for (std::size_t a : scored) {
    logged_world.push_back(logged[a]);
  }
  for (const auto & r : set.rollouts) {
    std::vector<std::vector<AgentState>> w;
    for (std::size_t a : scored) {
      w.push_back(r.agents[a]);
    }
    sim_world.push_back(std::move(w));
  }
  b.min_ade = min_ade(sim_world, logged_world);
  b.meta = realism_aggregate(b.components, weights);
  return b;
}

MetricBundle corpus_mean(const std::vector<MetricBundle> & bundles, const RealismWeights & weights)
{
  require(!bundles.empty(), "corpus_mean: no bundles");
  MetricBundle m;
  m.scenario_id = "corpus_mean";
  for (const auto & b : bundles) {
    for (std::size_t i = 0; i < kNumComponents; ++i) {
      m.components[i] += b.components[i];
    }
    m.min_ade += b.min_ade;
    m.collision_rate += b.collision_rate;
    m.offroad_rate += b.offroad_rate;
    m.agents += b.agents;
  }
  const double n = static_cast<double>(bundles.size());
  for (auto & c : m.components) {
    c /= n;
  }
  m.min_ade /= n;
  m.collision_rate /= n;
  m.offroad_rate /= n;
  m.meta = realism_aggregate(m.components, weights);
  return m;
}

nlohmann::json metrics_report(const std::vector<MetricBundle> & bundles, const MetricBundle & mean)
{
  nlohmann::json j;
  j["binning_version"] = kBinningVersion;
  j["histogram_epsilon"] = kHistogramEpsilon;
  j["scenarios"] = nlohmann::json::array();
  for (const auto & b : bundles) {
    j["scenarios"].push_back(b.to_json());
  }
  j["corpus_mean"] = mean.to_json();
  return j;
}

std::string metrics_csv(const std::vector<MetricBundle> & bundles, const MetricBundle & mean)
{
  std::ostringstream out;
  out.precision(10);
  out << "scenario_id";
  for (std::size_t i = 0; i < kNumComponents; ++i) {
    out << ',' << to_string(static_cast<Component>(i));
  }
  out << ",min_ade,meta,collision_rate,offroad_rate,agents,binning_version\n";
  auto row = [&](const MetricBundle & b) {
    out << b.scenario_id;
    for (double c : b.components) {
      out << ',' << c;
    }
    out << ',' << b.min_ade << ',' << b.meta << ',' << b.collision_rate << ',' << b.offroad_rate << ',' << b.agents
        << ',' << kBinningVersion << '\n';
  };
  for (const auto & b : bundles) {
    row(b);
  }
  row(mean);
  return out.str();
}
}  // namespace agentsim
