#include "agentsim/rollout/sampling.hpp"

#include "agentsim/error.hpp"

#include <algorithm>
#include <numeric>

namespace agentsim
{
std::string_view to_string(SamplingMode m)
{
  return m == SamplingMode::max_likelihood ? "max_likelihood" : "top_k_periodic";
}

SamplingMode parse_sampling_mode(std::string_view text)
{
  if (text == "max_likelihood") {
    return SamplingMode::max_likelihood;
  }
  if (text == "top_k_periodic") {
    return SamplingMode::top_k_periodic;
  }
  throw ValidationError("unknown sampling mode '" + std::string(text) + "' (max_likelihood, top_k_periodic)");
}

void SamplingPolicy::validate() const
{
  if (k < 1 || k > 64) {
    throw ValidationError("sampling.k must lie in [1, 64]");
  }
  if (period < 1) {
    throw ValidationError("sampling.period must be at least 1");
  }
}

std::size_t argmax_mode(const GmmPrediction & pred)
{
  require(!pred.modes.empty(), "prediction has no modes");
  std::size_t best = 0;
  for (std::size_t m = 1; m < pred.modes.size(); ++m) {
    if (pred.modes[m].prob > pred.modes[best].prob) {
      best = m;
    }
  }
  return best;
}

std::vector<std::size_t> top_k_modes(const GmmPrediction & pred, std::size_t k)
{
  std::vector<std::size_t> idx(pred.modes.size());
  std::iota(idx.begin(), idx.end(), 0);
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), [&](std::size_t a, std::size_t b) {
    return pred.modes[a].prob > pred.modes[b].prob || (pred.modes[a].prob == pred.modes[b].prob && a < b);
  });
  idx.resize(k);
  return idx;
}

std::size_t sample_mode(const GmmPrediction & pred, const SamplingPolicy & policy, std::size_t step, Rng & rng)
{
  if (!policy.scheduled(step) || policy.k == 1) {
    return argmax_mode(pred);
  }
  const auto top = top_k_modes(pred, policy.k);
  double total = 0.0;
  for (std::size_t m : top) {
    total += pred.modes[m].prob;
  }
  double u = rng.uniform() * total;
  for (std::size_t m : top) {
    if (u < pred.modes[m].prob) {
      return m;
    }
    u -= pred.modes[m].prob;
  }
  return top.back();
}
}  // namespace agentsim
