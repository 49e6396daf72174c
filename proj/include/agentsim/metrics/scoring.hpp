#ifndef AGENTSIM__METRICS__SCORING_HPP_
#define AGENTSIM__METRICS__SCORING_HPP_

#include "agentsim/scenario/types.hpp"

#include <json.hpp>

#include <array>
#include <span>
#include <string>
#include <vector>

namespace agentsim
{
inline constexpr const char * kBinningVersion = "bins-v1";
inline constexpr double kHistogramEpsilon = 0.1;

/// Uniform bins over [lo, hi]; values outside are clamped into the end bins.
struct BinEdges
{
  double lo = 0.0;
  double hi = 1.0;
  std::size_t bins = 1;

  std::size_t bin_of(double value) const;
};

struct FeatureHistogram
{
  BinEdges edges;
  std::vector<double> counts;
  double epsilon = kHistogramEpsilon;

  static FeatureHistogram build(std::span<const double> values, const BinEdges & edges, double epsilon = kHistogramEpsilon);
  double probability(std::size_t bin) const;
};

/// Smoothed mass of the logged value's bin divided by the largest smoothed bin mass.
double histogram_likelihood_score(
  std::span<const double> simulated, double logged, const BinEdges & edges, double epsilon = kHistogramEpsilon);

enum class Component : std::size_t {
  linear_speed,
  linear_accel,
  angular_speed,
  angular_accel,
  dist_to_obj,
  collision,
  ttc,
  dist_to_road_edge,
  offroad,
};
inline constexpr std::size_t kNumComponents = 9;
std::string_view to_string(Component c);
const BinEdges & bin_edges(Component c);

struct RealismWeights
{
  double kinematic = 0.3;
  double interactive = 0.4;
  double map = 0.3;
};

/// Weighted mean; each group weight is split evenly over its components.
double realism_aggregate(const std::array<double, kNumComponents> & components, const RealismWeights & weights = {});

struct MetricBundle
{
  std::string scenario_id;
  std::array<double, kNumComponents> components{};
  double min_ade = 0.0;
  double meta = 0.0;
  double collision_rate = 0.0;  //!< Fraction of (rollout, agent) pairs with any collision.
  double offroad_rate = 0.0;    //!< Fraction of (rollout, agent) pairs with any offroad step.
  std::size_t agents = 0;

  double component(Component c) const { return components[static_cast<std::size_t>(c)]; }
  nlohmann::json to_json() const;
};

/// rollouts[r][agent][step] vs. logged[agent][step]: mean over agents of min over rollouts of ADE.
double min_ade(const std::vector<std::vector<std::vector<AgentState>>> & rollouts,
  const std::vector<std::vector<AgentState>> & logged);

/**
 * Scores the non-ADV agents of the set against the scenario's logged future
 * (the kFutureSteps states after the history). Every rollout agent is an object
 * for the interactive features; only world agents are scored.
 */
MetricBundle evaluate(const Scenario & scenario, const RolloutSet & set, const RealismWeights & weights = {});

MetricBundle corpus_mean(const std::vector<MetricBundle> & bundles, const RealismWeights & weights = {});

nlohmann::json metrics_report(const std::vector<MetricBundle> & bundles, const MetricBundle & mean);
std::string metrics_csv(const std::vector<MetricBundle> & bundles, const MetricBundle & mean);
}  // namespace agentsim

#endif  // AGENTSIM__METRICS__SCORING_HPP_
