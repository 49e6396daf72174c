#ifndef AGENTSIM__NN__PARAM_STORE_HPP_
#define AGENTSIM__NN__PARAM_STORE_HPP_

#include "agentsim/nn/tensor.hpp"
#include "agentsim/rng.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace agentsim::nn
{
enum class Init {
  uniform_fan_in,  //!< U(-1/sqrt(cols), 1/sqrt(cols)); cols is the fan-in of a Linear weight.
  zeros,
  ones,
};

/// AdamW moments for one parameter.
struct AdamState
{
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
};

/**
 * @brief Named parameter registry.
 *
 * Iteration order is the lexicographic name order, which fixes the order of
 * optimizer updates, serialization and fingerprinting.
 */
class ParamStore
{
public:
  Tensor create(const std::string & name, std::size_t rows, std::size_t cols, Init init, Rng & rng);

  bool contains(const std::string & name) const { return params_.count(name) != 0; }
  const Tensor & get(const std::string & name) const;
  const std::map<std::string, Tensor> & parameters() const noexcept { return params_; }

  std::map<std::string, AdamState> & adam_state() noexcept { return adam_; }
  const std::map<std::string, AdamState> & adam_state() const noexcept { return adam_; }

  /// Allocates (or resets) every gradient buffer to zero.
  void zero_grad();
  std::size_t parameter_count() const;

  /// Overwrites the values of an existing parameter.
  void assign(const std::string & name, const std::vector<double> & values);

private:
  std::map<std::string, Tensor> params_;
  std::map<std::string, AdamState> adam_;
};
}  // namespace agentsim::nn

#endif  // AGENTSIM__NN__PARAM_STORE_HPP_
