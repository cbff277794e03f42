#ifndef CODEIL_EVALUATION_AUDIT_H_
#define CODEIL_EVALUATION_AUDIT_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "codeil/arm/trajectory.h"
#include "codeil/policies/policy.h"

namespace codeil::evaluation {

enum class LipschitzSource { kCertified, kEstimated };
std::string LipschitzSourceName(LipschitzSource source);

struct LipschitzConstant {
  double value = 0.0;
  LipschitzSource source = LipschitzSource::kCertified;
};

// Largest ratio |F(s) - F(s')| / |s - s'| of the closed-loop map
// F(s) = Step(s, pi(s)) over `samples` pairs, each a demonstration state and
// a random perturbation of relative size `radius`. A lower bound in general.
double EstimateLipschitz(const policies::Policy& policy,
                         std::span<const arm::Trajectory> demos, int samples,
                         double radius, std::uint64_t seed);

// The spectral-norm certificate for nn policies, the sampled estimate for
// everything else.
LipschitzConstant AuditLipschitz(const policies::Policy& policy,
                                 std::span<const arm::Trajectory> demos,
                                 std::uint64_t seed);

// |s_{t+1} - Step(s_t, pi(s_t))| for t < T.
std::vector<double> OneStepErrors(const policies::Policy& policy,
                                  const arm::Trajectory& traj);

struct TrajectoryAudit {
  int id = 0;
  int horizon = 0;
  bool diverged = false;
  double epsilon = 0.0;  // max one-step error on the demonstration
  double delta = 0.0;    // max one-step error on the reference trajectory
  double kappa = 0.0;    // max |s~_t - s_t|
  // min_t (epsilon + L dev_t - dev_{t+1}), with dev_t = |s^_t - s_t|.
  double recursion_margin = 0.0;
  int recursion_worst_step = -1;
  // sum_t sum_{tau<t} L^tau epsilon - sum_t dev_t.
  double cumulative_margin = 0.0;
  // sum |s~ - s| + sum |s^ - s~| - sum |s^ - s|.
  double split_margin = 0.0;
  // kappa (T+1) + sum_t (L^t |s^_0 - s~_0| + sum_{tau<t} L^tau delta)
  // - sum_t dev_t.
  double reference_bound_margin = 0.0;
};

struct AuditReport {
  LipschitzConstant lipschitz;
  bool aux_reference = false;
  double epsilon = 0.0;
  double delta = 0.0;
  double kappa = 0.0;
  double worst_recursion_margin = 0.0;
  double worst_cumulative_margin = 0.0;
  double worst_split_margin = 0.0;
  double worst_reference_bound_margin = 0.0;
  std::vector<TrajectoryAudit> trajectories;

  // Tolerance on every margin.
  static constexpr double kTolerance = 1e-9;
  bool RecursionHolds() const { return worst_recursion_margin >= -kTolerance; }
  bool SplitHolds() const { return worst_split_margin >= -kTolerance; }
};

// Rolls `policy` out on every demonstration and checks the one-step error
// recursion, its cumulative sum and the triangle split through a reference
// trajectory. `references` pairs with `demos` (an auxiliary trajectory per
// demonstration); when empty the demonstrations are their own reference.
// Diverged rollouts are audited on their finite prefix.
AuditReport TheoremAudit(const policies::Policy& policy,
                         std::span<const arm::Trajectory> demos,
                         std::span<const arm::Trajectory> references,
                         const LipschitzConstant& lipschitz);

}  // namespace codeil::evaluation

#endif  // CODEIL_EVALUATION_AUDIT_H_
