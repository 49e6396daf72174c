#ifndef AGENTSIM__DECODER__INTENTION_POINTS_HPP_
#define AGENTSIM__DECODER__INTENTION_POINTS_HPP_

#include "agentsim/scenario/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace agentsim
{
struct KMeansResult
{
  std::vector<Vec2> centroids;
  std::vector<double> objective;  //!< Sum of squared distances after each assignment pass.
  std::size_t iterations = 0;
  std::size_t requested_k = 0;  //!< centroids.size() < requested_k when there were fewer distinct points.
};

/// Lloyd iterations from a D^2-weighted seeding; empty clusters keep their centroid.
KMeansResult kmeans(
  std::span<const Vec2> points, std::size_t k, std::uint64_t seed, std::size_t max_iterations = 50,
  double tolerance = 1e-6);

struct IntentionPointSet
{
  AgentCategory category = AgentCategory::vehicle;
  std::vector<Vec2> points;
  std::size_t requested_k = 0;
};

/**
 * Displacements min(horizon, remaining) steps ahead, in the agent frame at every
 * split point of every track of the category.
 */
std::vector<Vec2> intention_endpoints(
  const std::vector<Scenario> & corpus, AgentCategory category, std::size_t horizon = 10);

/// Throws ValidationError when the corpus has no track of the category.
IntentionPointSet fit_intention_points(
  const std::vector<Scenario> & corpus, AgentCategory category, std::size_t k = 64, std::uint64_t seed = 0,
  std::size_t horizon = 10);

/// Index of the nearest point; ties go to the lowest index.
std::size_t nearest_point(std::span<const Vec2> points, const Vec2 & target);
}  // namespace agentsim

#endif  // AGENTSIM__DECODER__INTENTION_POINTS_HPP_
