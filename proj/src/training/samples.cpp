#include "agentsim/training/samples.hpp"

#include "agentsim/error.hpp"

#include <algorithm>

namespace agentsim
{
namespace
{
std::size_t max_split(const AgentTrack & t)
{
  if (t.states.size() < kMinSplit + 1) {
    throw ValidationError("track '" + t.agent_id + "' is too short for a history/future split");
  }
  return std::min(kMaxSplit, t.states.size() - 1);
}
}  // namespace

std::vector<TrainSample> make_training_samples(
  const Scenario & scenario, std::size_t scenario_index, std::size_t samples_per_track, Rng & rng)
{
  std::vector<TrainSample> out;
  out.reserve(scenario.tracks.size() * samples_per_track);
  for (std::size_t i = 0; i < scenario.tracks.size(); ++i) {
    const auto hi = static_cast<std::int64_t>(max_split(scenario.tracks[i]));
    for (std::size_t k = 0; k < samples_per_track; ++k) {
      out.push_back({scenario_index, i, static_cast<std::size_t>(rng.uniform_int(kMinSplit, hi))});
    }
  }
  return out;
}

std::vector<TrainSample> make_training_samples_at(
  const Scenario & scenario, std::size_t scenario_index, std::size_t split)
{
  std::vector<TrainSample> out;
  for (std::size_t i = 0; i < scenario.tracks.size(); ++i) {
    if (split < kMinSplit || split > max_split(scenario.tracks[i])) {
      throw ValidationError("split " + std::to_string(split) + " out of range for track '" +
                            scenario.tracks[i].agent_id + "'");
    }
    out.push_back({scenario_index, i, split});
  }
  return out;
}
}  // namespace agentsim
