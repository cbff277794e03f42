#ifndef CODEIL_TRAINING_LOSSES_H_
#define CODEIL_TRAINING_LOSSES_H_

#include <cstdint>
#include <span>
#include <vector>

#include "codeil/arm/trajectory.h"
#include "codeil/auxtraj/aux_trajectory.h"
#include "codeil/diffkit/tape.h"
#include "codeil/policies/policy.h"

namespace codeil::training {

using auxtraj::SampleRef;
using diffkit::Var;

struct BatchTerms {
  Var total;
  Var state_term;   // invalid for behavior cloning
  Var action_term;
};

struct LossValues {
  double total = 0.0;
  double state_term = 0.0;
  double action_term = 0.0;
};

// Time steps t < T of every demonstration, ordered by (demo, t).
std::vector<SampleRef> ActionRefs(std::span<const arm::Trajectory> demos);

// scale * sum over refs of |a_t - pi(s_t)|^2 on the demonstrations.
BatchTerms RecordBcBatch(diffkit::Tape& tape, const policies::Policy& policy,
                         int policy_offset,
                         std::span<const arm::Trajectory> demos,
                         std::span<const SampleRef> refs, double scale);

// Collocation loss on the samples `refs` (sorted by demo, all t < T):
//   state  = scale * sum |s_t - s~_t|^2, plus the final state of a demo
//            whenever its last step is in refs,
//   action = scale * sum |a~_t - pi(s~_t)|^2,
//   total  = state + nu * action.
// Summed over all action steps with scale 1/(2 sum T) this is the full loss.
BatchTerms RecordCodeBatch(diffkit::Tape& tape, const policies::Policy& policy,
                           int policy_offset, const auxtraj::AuxTrajectory& aux,
                           int aux_offset,
                           std::span<const arm::Trajectory> demos,
                           std::span<const SampleRef> refs, double nu,
                           double scale);

// Action term with the auxiliary samples pinned to the demonstrations.
BatchTerms RecordFrozenCodeBatch(diffkit::Tape& tape,
                                 const policies::Policy& policy,
                                 int policy_offset,
                                 std::span<const arm::Trajectory> demos,
                                 std::span<const SampleRef> refs, double nu,
                                 double scale);

// (1 / (2 sum T)) sum_i sum_t |a_t - pi(s_t)|^2. Throws if a demonstration
// has no actions.
double BcLoss(const policies::Policy& policy,
              std::span<const arm::Trajectory> demos);

LossValues CodeLoss(const policies::Policy& policy,
                    const auxtraj::AuxTrajectory& aux,
                    std::span<const arm::Trajectory> demos, double nu);

// Originals followed by noisy copies of ceil(fraction * N) trajectories picked
// with `seed`. Copies get N(0, sigma^2) added to every q and qd entry and keep
// the clean actions as targets.
std::vector<arm::Trajectory> InjectNoise(std::span<const arm::Trajectory> demos,
                                         double sigma, double fraction,
                                         std::uint64_t seed);

}  // namespace codeil::training

#endif  // CODEIL_TRAINING_LOSSES_H_
