#ifndef AGENTSIM__ROLLOUT__SAMPLING_HPP_
#define AGENTSIM__ROLLOUT__SAMPLING_HPP_

#include "agentsim/decoder/gmm.hpp"
#include "agentsim/rng.hpp"

#include <json.hpp>

namespace agentsim
{
enum class SamplingMode { max_likelihood, top_k_periodic };

std::string_view to_string(SamplingMode m);
SamplingMode parse_sampling_mode(std::string_view text);

struct SamplingPolicy
{
  SamplingMode mode = SamplingMode::top_k_periodic;
  std::size_t k = 3;
  std::size_t period = 5;  //!< Top-k draws happen on steps with step % period == 0.

  void validate() const;
  bool scheduled(std::size_t step) const { return mode == SamplingMode::top_k_periodic && step % period == 0; }
};

/// Highest probability, lowest index on ties.
std::size_t argmax_mode(const GmmPrediction & pred);

/// The k most likely modes, most likely first (ties to lower index).
std::vector<std::size_t> top_k_modes(const GmmPrediction & pred, std::size_t k);

std::size_t sample_mode(const GmmPrediction & pred, const SamplingPolicy & policy, std::size_t step, Rng & rng);
}  // namespace agentsim

#endif  // AGENTSIM__ROLLOUT__SAMPLING_HPP_
