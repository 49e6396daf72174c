#ifndef AGENTSIM__TRAINING__SAMPLES_HPP_
#define AGENTSIM__TRAINING__SAMPLES_HPP_

#include "agentsim/rng.hpp"
#include "agentsim/scenario/types.hpp"

#include <vector>

namespace agentsim
{
/// One (scenario, target track, split) triple. Every other agent contributes its
/// history states [0, split) as context.
struct TrainSample
{
  std::size_t scenario = 0;
  std::size_t track = 0;
  std::size_t split = 0;  //!< History length; the future starts at states[split].

  bool operator==(const TrainSample &) const = default;
};

inline constexpr std::size_t kMinSplit = 2;
inline constexpr std::size_t kMaxSplit = 90;

/// samples_per_track uniform splits in [2, min(90, len - 1)] per track, drawn from rng in track order.
std::vector<TrainSample> make_training_samples(
  const Scenario & scenario, std::size_t scenario_index, std::size_t samples_per_track, Rng & rng);

/// One sample per track at a fixed split.
std::vector<TrainSample> make_training_samples_at(
  const Scenario & scenario, std::size_t scenario_index, std::size_t split);
}  // namespace agentsim

#endif  // AGENTSIM__TRAINING__SAMPLES_HPP_
