#ifndef AGENTSIM__SCENARIO__TYPES_HPP_
#define AGENTSIM__SCENARIO__TYPES_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace agentsim
{
inline constexpr double kDt = 0.1;                 //!< Simulation interval [s].
inline constexpr std::size_t kHistorySteps = 11;   //!< Logged history observations.
inline constexpr std::size_t kFutureSteps = 80;    //!< Simulated steps per rollout.
inline constexpr std::size_t kScenarioSteps = 91;  //!< History + future.
inline constexpr std::size_t kRolloutCount = 32;   //!< Rollouts per scenario.
inline constexpr std::size_t kDefaultAgentCap = 16;
inline constexpr int kScenarioSchemaVersion = 1;

enum class AgentCategory : int { vehicle = 0, pedestrian = 1, cyclist = 2 };
inline constexpr std::size_t kNumCategories = 3;

enum class PolylineType : int { lane_center = 0, road_edge = 1, crosswalk = 2, stop_line = 3 };
inline constexpr std::size_t kNumPolylineTypes = 4;

std::string_view to_string(AgentCategory category);
std::string_view to_string(PolylineType type);
AgentCategory parse_category(std::string_view text);
PolylineType parse_polyline_type(std::string_view text);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

struct Vec2
{
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2 & o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2 & o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Vec2 &) const = default;
  double dot(const Vec2 & o) const { return x * o.x + y * o.y; }
  double cross(const Vec2 & o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
};

struct AgentState
{
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double heading = 0.0;  //!< (-pi, pi]
  double vx = 0.0;
  double vy = 0.0;
  double length = 0.0;
  double width = 0.0;
  AgentCategory category = AgentCategory::vehicle;
  bool valid = true;

  Vec2 position() const { return {x, y}; }
  bool operator==(const AgentState &) const = default;
};

/// Builds a state with the heading canonicalized into (-pi, pi].
AgentState make_state(
  double x, double y, double z, double heading, double vx, double vy, double length, double width,
  AgentCategory category, bool valid = true);

/// Time-ordered states at a fixed 0.1 s interval; state i is at (start_step + i) * kDt.
struct AgentTrack
{
  std::string agent_id;
  std::int64_t start_step = 0;
  std::vector<AgentState> states;
  std::size_t history_len = kHistorySteps;

  double timestamp(std::size_t i) const { return static_cast<double>(start_step + static_cast<std::int64_t>(i)) * kDt; }
  std::size_t size() const { return states.size(); }
};

struct MapPolyline
{
  std::vector<Vec2> points;
  std::vector<Vec2> directions;  //!< Unit segment tangents; the last point copies its predecessor.
  PolylineType type = PolylineType::lane_center;

  /// Computes directions; throws on < 2 points or a zero-length segment.
  static MapPolyline make(std::vector<Vec2> points, PolylineType type);
};

struct Scenario
{
  std::string scenario_id;
  std::vector<MapPolyline> polylines;
  std::vector<Vec2> drivable_area;  //!< Simple polygon, either orientation.
  std::vector<AgentTrack> tracks;
  std::string adv_id;
  std::size_t duration_steps = kScenarioSteps;

  std::size_t track_index(std::string_view agent_id) const;
  std::size_t adv_index() const { return track_index(adv_id); }
};

/// One simulated episode for every simulated agent.
struct Rollout
{
  std::uint64_t seed = 0;
  std::string model_fingerprint;
  std::vector<std::vector<AgentState>> agents;  //!< [agent][step], aligned with RolloutSet::agent_ids.
};

struct RolloutSet
{
  std::string scenario_id;
  std::uint64_t master_seed = 0;
  std::string model_fingerprint;
  std::vector<std::string> agent_ids;
  std::vector<Rollout> rollouts;
};

/// True iff no two non-adjacent edges intersect (and adjacent edges only share their vertex).
bool polygon_is_simple(std::span<const Vec2> polygon);

void validate_track(const AgentTrack & track);
/// Throws ValidationError describing the first violated Scenario invariant.
void validate_scenario(const Scenario & scenario, std::size_t agent_cap = kDefaultAgentCap);
void validate_rollout_set(const RolloutSet & set, std::size_t expected_rollouts = kRolloutCount,
  std::size_t expected_steps = kFutureSteps);

struct HistoryFutureSplit
{
  AgentTrack history;  //!< history_len == split_index
  AgentTrack future;   //!< history_len == 0
};

/// Splits at split_index in [2, len - 1]: history = states[0, split), future = states[split, len).
HistoryFutureSplit split_history_future(const AgentTrack & track, std::size_t split_index);
}  // namespace agentsim

#endif  // AGENTSIM__SCENARIO__TYPES_HPP_
