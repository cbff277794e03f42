#ifndef CODEIL_ARM_TRAJECTORY_H_
#define CODEIL_ARM_TRAJECTORY_H_

#include <functional>
#include <optional>
#include <vector>

#include "codeil/arm/arm.h"

namespace codeil::arm {

struct TaskMeta {
  Pose2 start_ee;
  Pose2 goal_ee;
  // Extra task descriptor (e.g. an obstacle); empty for plain reaching.
  Vector features;
};

// Inputs a learned policy sees besides the state: goal position, then the
// extra features.
Vector PolicyFeatures(const TaskMeta& meta);

struct Trajectory {
  int id = 0;
  double ts = 0.01;
  std::vector<State> states;    // T + 1
  std::vector<Vector> actions;  // T, or empty
  TaskMeta meta;
  bool expert_generated = false;

  int horizon() const { return static_cast<int>(states.size()) - 1; }
  double duration() const { return horizon() * ts; }
  bool has_actions() const { return !actions.empty(); }
  // Throws unless the shape invariants hold and, for expert trajectories,
  // every step reproduces the double-integrator update within `tol`.
  void Validate(double tol = 1e-9) const;
};

// Called once per step, in order. May keep internal state.
using Controller = std::function<Vector(const State&, const TaskMeta&)>;

// states[0] = s0, states[t+1] = Step(states[t], controller(states[t])).
// Throws NumericError with the step index if the controller returns a
// non-finite action.
Trajectory Rollout(const Controller& controller, const State& s0, int horizon,
                   double ts, const TaskMeta& meta);

// Controller that plays back `actions` in order.
Controller ReplayController(std::vector<Vector> actions);

}  // namespace codeil::arm

#endif  // CODEIL_ARM_TRAJECTORY_H_
