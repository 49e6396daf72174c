#include "agentsim/decoder/intention_points.hpp"

#include "agentsim/error.hpp"
#include "agentsim/rng.hpp"
#include "agentsim/scenario/frame.hpp"

#include <algorithm>
#include <limits>

namespace agentsim
{
namespace
{
double dist2(const Vec2 & a, const Vec2 & b)
{
  const Vec2 d = a - b;
  return d.dot(d);
}
}  // namespace

std::size_t nearest_point(std::span<const Vec2> points, const Vec2 & target)
{
  require(!points.empty(), "nearest_point: empty point set");
  std::size_t best = 0;
  double best_d = dist2(points[0], target);
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double d = dist2(points[i], target);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

KMeansResult kmeans(std::span<const Vec2> points, std::size_t k, std::uint64_t seed, std::size_t max_iterations,
  double tolerance)
{
  require(!points.empty(), "kmeans: no points");
  require(k >= 1, "kmeans: k must be positive");
  KMeansResult out;
  out.requested_k = k;

  std::vector<Vec2> distinct(points.begin(), points.end());
  std::sort(distinct.begin(), distinct.end(), [](const Vec2 & a, const Vec2 & b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  k = std::min(k, distinct.size());

  // Seeding: first centroid uniform, then proportional to squared distance from the chosen set.
  Rng rng(seed);
  std::vector<Vec2> & c = out.centroids;
  c.push_back(points[rng.below(points.size())]);
  std::vector<double> d2(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    d2[i] = dist2(points[i], c[0]);
  }
  while (c.size() < k) {
    double total = 0.0;
    for (double v : d2) {
      total += v;
    }
    double u = rng.uniform() * total;
    std::size_t pick = points.size();
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (d2[i] > 0.0) {
        pick = i;
        if (u < d2[i]) {
          break;
        }
        u -= d2[i];
      }
    }
    c.push_back(points[pick]);
    for (std::size_t i = 0; i < points.size(); ++i) {
      d2[i] = std::min(d2[i], dist2(points[i], c.back()));
    }
  }

  std::vector<std::size_t> assign(points.size());
  for (std::size_t it = 0; it < max_iterations; ++it) {
    double objective = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      assign[i] = nearest_point(c, points[i]);
      objective += dist2(points[i], c[assign[i]]);
    }
    out.objective.push_back(objective);
    std::vector<Vec2> sum(k);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      sum[assign[i]] = sum[assign[i]] + points[i];
      ++count[assign[i]];
    }
    double moved = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (count[j] == 0) {
        continue;
      }
      const Vec2 next = sum[j] * (1.0 / static_cast<double>(count[j]));
      moved = std::max(moved, (next - c[j]).norm());
      c[j] = next;
    }
    out.iterations = it + 1;
    if (moved < tolerance) {
      break;
    }
  }
  return out;
}

std::vector<Vec2> intention_endpoints(const std::vector<Scenario> & corpus, AgentCategory category, std::size_t horizon)
{
  std::vector<Vec2> out;
  for (const auto & s : corpus) {
    for (const auto & t : s.tracks) {
      if (t.states.empty() || t.states.front().category != category) {
        continue;
      }
      for (std::size_t split = 2; split < t.states.size(); ++split) {
        const AgentState & cur = t.states[split - 1];
        const std::size_t ahead = std::min(split - 1 + horizon, t.states.size() - 1);
        if (!cur.valid || !t.states[ahead].valid) {
          continue;
        }
        out.push_back(Frame(pose_of(cur)).to_local(t.states[ahead].position()));
      }
    }
  }
  return out;
}

IntentionPointSet fit_intention_points(
  const std::vector<Scenario> & corpus, AgentCategory category, std::size_t k, std::uint64_t seed, std::size_t horizon)
{
  const auto endpoints = intention_endpoints(corpus, category, horizon);
  if (endpoints.empty()) {
    throw ValidationError("fit_intention_points: no " + std::string(to_string(category)) + " tracks in the corpus");
  }
  const KMeansResult r = kmeans(endpoints, k, seed);
  return {category, r.centroids, k};
}
}  // namespace agentsim
