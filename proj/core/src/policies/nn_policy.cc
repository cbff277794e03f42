#include "codeil/policies/nn_policy.h"

#include <cmath>

#include "codeil/diffkit/verify.h"
#include "codeil/error.h"

namespace codeil::policies {

NnPolicy::NnPolicy(int dof, int feature_dim, MlpParams net)
    : dof_(dof), feature_dim_(feature_dim), net_(std::move(net)) {
  net_.Validate();
  if (net_.InputDim() != 2 * dof + feature_dim || net_.OutputDim() != dof) {
    throw InvalidArgument("nn policy network maps " +
                          std::to_string(net_.InputDim()) + " -> " +
                          std::to_string(net_.OutputDim()) + ", expected " +
                          std::to_string(2 * dof + feature_dim) + " -> " +
                          std::to_string(dof));
  }
}

NnPolicy NnPolicy::Random(int dof, int feature_dim, std::mt19937_64& rng,
                          const std::vector<int>& hidden) {
  std::vector<int> widths{2 * dof + feature_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(dof);
  return NnPolicy(dof, feature_dim,
                  diffkit::MakeMlp(widths, diffkit::Activation::kElu, rng));
}

Vector NnPolicy::Act(const arm::State& state, const Vector& features) const {
  if (state.q.size() != dof_ || state.qd.size() != dof_ ||
      features.size() != feature_dim_) {
    throw InvalidArgument("nn policy input layout mismatch");
  }
  Vector input(2 * dof_ + feature_dim_);
  input << state.q, state.qd, features;
  return diffkit::MlpForward(net_, input);
}

Var NnPolicy::Record(diffkit::Tape& tape, int offset, Var q, Var qd,
                     Var features) const {
  const Var parts[] = {q, qd, features};
  return diffkit::TapeMlp(tape, net_, offset, diffkit::ConcatRows(parts));
}

std::unique_ptr<Policy> NnPolicy::Clone() const {
  return std::make_unique<NnPolicy>(*this);
}

double ClosedLoopLipschitz(double beta, double ts) {
  return std::sqrt(2.0 * (1.0 + (1.0 + beta * beta) * ts * ts));
}

double PolicyLipschitz(const NnPolicy& policy, double ts) {
  return ClosedLoopLipschitz(diffkit::SpectralBound(policy.net()), ts);
}

}  // namespace codeil::policies
