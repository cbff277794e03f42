#ifndef CODEIL_DIFFKIT_ADAM_H_
#define CODEIL_DIFFKIT_ADAM_H_

#include <cstdint>

#include "codeil/diffkit/mlp.h"

namespace codeil::diffkit {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Decoupled: params *= (1 - lr * weight_decay) before the moment update.
  // Coupled: weight_decay * params is added to the gradient.
  bool decoupled_weight_decay = true;
};

struct AdamState {
  Vector m;
  Vector v;
  std::int64_t step = 0;
};

// In-place update of `params`. Throws NumericError naming the first
// non-finite gradient entry.
void AdamStep(Vector& params, const Vector& grads, AdamState& state, double lr,
              double weight_decay, const AdamOptions& options = {});

}  // namespace codeil::diffkit

#endif  // CODEIL_DIFFKIT_ADAM_H_
