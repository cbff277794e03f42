#include "codeil/diffkit/adam.h"

#include <cmath>

#include "codeil/error.h"

namespace codeil::diffkit {

void AdamStep(Vector& params, const Vector& grads, AdamState& state, double lr,
              double weight_decay, const AdamOptions& options) {
  if (grads.size() != params.size()) {
    throw InvalidArgument("gradient has " + std::to_string(grads.size()) +
                          " entries, parameters have " +
                          std::to_string(params.size()));
  }
  for (Eigen::Index i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads(i))) {
      throw NumericError("non-finite gradient at parameter " +
                         std::to_string(i));
    }
  }
  if (state.m.size() != params.size()) {
    state.m = Vector::Zero(params.size());
    state.v = Vector::Zero(params.size());
    state.step = 0;
  }
  Vector g = grads;
  if (weight_decay != 0.0) {
    if (options.decoupled_weight_decay) {
      params *= (1.0 - lr * weight_decay);
    } else {
      g += weight_decay * params;
    }
  }
  ++state.step;
  state.m = options.beta1 * state.m + (1.0 - options.beta1) * g;
  state.v = options.beta2 * state.v + (1.0 - options.beta2) * g.cwiseAbs2();
  const double c1 = 1.0 - std::pow(options.beta1, state.step);
  const double c2 = 1.0 - std::pow(options.beta2, state.step);
  params.array() -= lr * (state.m.array() / c1) /
                    ((state.v.array() / c2).sqrt() + options.eps);
}

}  // namespace codeil::diffkit
