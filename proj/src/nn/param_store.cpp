#include "agentsim/nn/param_store.hpp"

#include "agentsim/error.hpp"

#include <cmath>

namespace agentsim::nn
{
Tensor ParamStore::create(const std::string & name, std::size_t rows, std::size_t cols, Init init, Rng & rng)
{
  require(!contains(name), "duplicate parameter name: " + name);
  std::vector<double> values(rows * cols, 0.0);
  switch (init) {
    case Init::uniform_fan_in: {
      const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
      for (auto & v : values) {
        v = rng.uniform(-bound, bound);
      }
      break;
    }
    case Init::ones:
      std::fill(values.begin(), values.end(), 1.0);
      break;
    case Init::zeros:
      break;
  }
  auto tensor = Tensor::from(rows, cols, std::move(values), true);
  params_.emplace(name, tensor);
  return tensor;
}

const Tensor & ParamStore::get(const std::string & name) const
{
  const auto it = params_.find(name);
  require(it != params_.end(), "unknown parameter: " + name);
  return it->second;
}

void ParamStore::zero_grad()
{
  for (auto & [name, t] : params_) {
    t.zero_grad();
  }
}

std::size_t ParamStore::parameter_count() const
{
  std::size_t n = 0;
  for (const auto & [name, t] : params_) {
    n += t.size();
  }
  return n;
}

void ParamStore::assign(const std::string & name, const std::vector<double> & values)
{
  auto t = get(name);
  require(values.size() == t.size(), "parameter size mismatch for " + name);
  check_finite(values, "ParamStore::assign");
  std::copy(values.begin(), values.end(), t.mutable_data().begin());
}
}  // namespace agentsim::nn
