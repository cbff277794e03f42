#ifndef CODEIL_EVALUATION_METRICS_H_
#define CODEIL_EVALUATION_METRICS_H_

#include <functional>
#include <span>
#include <vector>

#include "codeil/arm/arm.h"
#include "codeil/arm/trajectory.h"

namespace codeil::evaluation {

using diffkit::Vector;

// Builds a fresh controller for the task of one demonstration.
using ControllerFactory =
    std::function<arm::Controller(const arm::Trajectory& demo)>;

struct RolloutOutcome {
  // Finite prefix of the rollout; complete unless diverged.
  arm::Trajectory rollout;
  bool diverged = false;
  int divergence_step = -1;
};

// Runs `controller` from the demonstration's first state for its horizon.
// A non-finite action or state stops the rollout and marks the step.
RolloutOutcome RolloutLike(const arm::Controller& controller,
                           const arm::Trajectory& demo);

// sqrt(1/(T+1) sum_t |q^_t - q_t|^2 / d), in radians. Infinite for a
// diverged rollout.
double PositionRmse(const RolloutOutcome& outcome, const arm::Trajectory& demo);

// Same over the stacked state (q, qd), divided by 2d.
double StateRmse(const RolloutOutcome& outcome, const arm::Trajectory& demo);

// |s^_t - s_t| for t = 0..T over (q, qd). Steps past a divergence are
// infinite.
std::vector<double> StateDeviations(const RolloutOutcome& outcome,
                                    const arm::Trajectory& demo);

// Linearly interpolated quantile of `values` (sorted copy), p in [0, 1].
double Quantile(std::vector<double> values, double p);

struct DeviationQuantiles {
  std::vector<double> q25, q50, q75;
  std::vector<int> count;  // trajectories still running at each step
};

// Per-step quartiles over trajectories. Arrays have the length of the
// longest series; shorter series drop out past their end.
DeviationQuantiles DeviationCurve(
    std::span<const std::vector<double>> deviations);

// Distance from the rollout's final end-effector position to the goal.
double FinalGoalDistance(const arm::ArmSpec& arm, const RolloutOutcome& outcome,
                         const arm::Trajectory& demo);

inline constexpr double kDefaultSuccessRadius = 0.02;

// Fraction of demonstrations whose rollout ends within `radius` of the goal.
double SuccessRate(const ControllerFactory& factory, const arm::ArmSpec& arm,
                   std::span<const arm::Trajectory> demos,
                   double radius = kDefaultSuccessRadius);

}  // namespace codeil::evaluation

#endif  // CODEIL_EVALUATION_METRICS_H_
