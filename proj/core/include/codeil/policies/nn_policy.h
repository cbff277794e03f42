#ifndef CODEIL_POLICIES_NN_POLICY_H_
#define CODEIL_POLICIES_NN_POLICY_H_

#include <vector>

#include "codeil/policies/policy.h"

namespace codeil::policies {

// Unstructured policy: an MLP on [q, qd, features] producing a joint
// acceleration.
class NnPolicy : public Policy {
 public:
  NnPolicy(int dof, int feature_dim, MlpParams net);

  // elu hidden layers, 256 and 128 units unless overridden.
  static NnPolicy Random(int dof, int feature_dim, std::mt19937_64& rng,
                         const std::vector<int>& hidden = {256, 128});

  PolicyClass kind() const override { return PolicyClass::kNn; }
  int dof() const override { return dof_; }
  int feature_dim() const override { return feature_dim_; }

  Vector Act(const arm::State& state, const Vector& features) const override;
  Var Record(diffkit::Tape& tape, int offset, Var q, Var qd,
             Var features) const override;

  std::vector<const MlpParams*> Networks() const override { return {&net_}; }
  std::vector<MlpParams*> MutableNetworks() override { return {&net_}; }
  std::unique_ptr<Policy> Clone() const override;

  const MlpParams& net() const { return net_; }

 private:
  int dof_;
  int feature_dim_;
  MlpParams net_;
};

// Closed-loop Lipschitz constant of s -> f(s, pi(s)) for the double
// integrator, given a beta-Lipschitz policy: sqrt(2 (1 + (1 + beta^2) ts^2)).
double ClosedLoopLipschitz(double beta, double ts);

// Certificate for an NnPolicy with beta = SpectralBound(net). Features are
// constant along a rollout, so the full-network bound over-estimates the
// state-restricted one.
double PolicyLipschitz(const NnPolicy& policy, double ts);

}  // namespace codeil::policies

#endif  // CODEIL_POLICIES_NN_POLICY_H_
