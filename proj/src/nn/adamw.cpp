#include "agentsim/nn/adamw.hpp"

#include "agentsim/error.hpp"

#include <cmath>

namespace agentsim::nn
{
void adamw_step(ParamStore & store, const AdamWConfig & config)
{
  for (const auto & [name, param] : store.parameters()) {
    if (!param.has_grad()) {
      throw ValidationError("adamw_step: missing gradient for " + name);
    }
    check_finite(param.grad(), "gradient of " + name);
  }
  for (const auto & [name, param_const] : store.parameters()) {
    Tensor param = param_const;
    auto & state = store.adam_state()[name];
    if (state.m.size() != param.size()) {
      state.m.assign(param.size(), 0.0);
      state.v.assign(param.size(), 0.0);
      state.step = 0;
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
    auto p = param.mutable_data();
    const auto g = param.grad();
    const double decay = 1.0 - config.lr * config.weight_decay;
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] *= decay;
      state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g[i];
      state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double m_hat = state.m[i] / bc1;
      const double v_hat = state.v[i] / bc2;
      p[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
    }
  }
}

double clip_grad_norm(ParamStore & store, double max_norm)
{
  double sq = 0.0;
  for (const auto & [name, param] : store.parameters()) {
    for (const double g : param.grad()) {
      sq += g * g;
    }
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for (const auto & [name, param_const] : store.parameters()) {
      Tensor param = param_const;
      for (auto & g : param.mutable_grad()) {
        g *= factor;
      }
    }
  }
  return norm;
}
}  // namespace agentsim::nn
