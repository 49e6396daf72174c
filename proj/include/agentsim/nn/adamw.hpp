#ifndef AGENTSIM__NN__ADAMW_HPP_
#define AGENTSIM__NN__ADAMW_HPP_

#include "agentsim/nn/param_store.hpp"

namespace agentsim::nn
{
struct AdamWConfig
{
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/**
 * @brief One AdamW update of every parameter in the store.
 *
 * Decoupled decay p <- p (1 - lr wd) is applied first, then the
 * bias-corrected Adam step. Throws if a gradient buffer was never allocated
 * or holds a non-finite value.
 */
void adamw_step(ParamStore & store, const AdamWConfig & config);

/// Scales all gradients so their global L2 norm is at most max_norm. Returns the norm before clipping.
double clip_grad_norm(ParamStore & store, double max_norm);
}  // namespace agentsim::nn

#endif  // AGENTSIM__NN__ADAMW_HPP_
