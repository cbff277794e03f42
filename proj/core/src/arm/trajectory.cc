#include "codeil/arm/trajectory.h"

#include <memory>

#include "codeil/error.h"

namespace codeil::arm {

Vector PolicyFeatures(const TaskMeta& meta) {
  Vector f(2 + meta.features.size());
  f(0) = meta.goal_ee.x;
  f(1) = meta.goal_ee.y;
  f.tail(meta.features.size()) = meta.features;
  return f;
}

void Trajectory::Validate(double tol) const {
  if (!(ts > 0.0)) throw InvalidArgument("trajectory sample time must be > 0");
  if (states.size() < 2) throw InvalidArgument("trajectory needs >= 2 states");
  const Eigen::Index d = states.front().q.size();
  for (const State& s : states) {
    if (s.q.size() != d || s.qd.size() != d) {
      throw InvalidArgument("trajectory " + std::to_string(id) +
                            ": inconsistent state dimensions");
    }
    if (!s.q.allFinite() || !s.qd.allFinite()) {
      throw InvalidArgument("trajectory " + std::to_string(id) +
                            ": non-finite state");
    }
  }
  if (!actions.empty() && actions.size() + 1 != states.size()) {
    throw InvalidArgument("trajectory " + std::to_string(id) + ": " +
                          std::to_string(actions.size()) + " actions for " +
                          std::to_string(states.size()) + " states");
  }
  if (expert_generated) {
    if (actions.empty()) {
      throw InvalidArgument("expert trajectory without actions");
    }
    for (size_t t = 0; t < actions.size(); ++t) {
      const State next = Step(states[t], actions[t], ts);
      const double err = (next.Stacked() - states[t + 1].Stacked())
                              .cwiseAbs()
                              .maxCoeff();
      if (err > tol) {
        throw InvalidArgument("trajectory " + std::to_string(id) + " step " +
                              std::to_string(t) +
                              " violates the dynamics by " +
                              std::to_string(err));
      }
    }
  }
}

Trajectory Rollout(const Controller& controller, const State& s0, int horizon,
                   double ts, const TaskMeta& meta) {
  if (horizon < 1) throw InvalidArgument("rollout horizon must be >= 1");
  Trajectory traj;
  traj.ts = ts;
  traj.meta = meta;
  traj.states.reserve(horizon + 1);
  traj.actions.reserve(horizon);
  traj.states.push_back(s0);
  for (int t = 0; t < horizon; ++t) {
    Vector a = controller(traj.states.back(), meta);
    if (!a.allFinite()) {
      throw NumericError("controller returned a non-finite action at step " +
                         std::to_string(t));
    }
    traj.states.push_back(Step(traj.states.back(), a, ts));
    traj.actions.push_back(std::move(a));
  }
  return traj;
}

Controller ReplayController(std::vector<Vector> actions) {
  auto shared = std::make_shared<std::vector<Vector>>(std::move(actions));
  auto next = std::make_shared<size_t>(0);
  return [shared, next](const State& s, const TaskMeta&) -> Vector {
    if (*next >= shared->size()) return Vector::Zero(s.qd.size());
    return (*shared)[(*next)++];
  };
}

}  // namespace codeil::arm
