#include "codeil/evaluation/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "codeil/error.h"

namespace codeil::evaluation {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void CheckComparable(const RolloutOutcome& outcome,
                     const arm::Trajectory& demo) {
  if (demo.states.empty()) throw InvalidArgument("empty demonstration");
  if (!outcome.diverged &&
      outcome.rollout.states.size() != demo.states.size()) {
    throw InvalidArgument("rollout and demonstration lengths differ");
  }
}

}  // namespace

RolloutOutcome RolloutLike(const arm::Controller& controller,
                           const arm::Trajectory& demo) {
  if (demo.states.empty()) throw InvalidArgument("empty demonstration");
  RolloutOutcome out;
  arm::Trajectory& traj = out.rollout;
  traj.id = demo.id;
  traj.ts = demo.ts;
  traj.meta = demo.meta;
  traj.states.reserve(demo.states.size());
  traj.actions.reserve(demo.horizon());
  traj.states.push_back(demo.states.front());
  for (int t = 0; t < demo.horizon(); ++t) {
    Vector a = controller(traj.states.back(), traj.meta);
    if (!a.allFinite()) {
      out.diverged = true;
      out.divergence_step = t;
      break;
    }
    arm::State next = arm::Step(traj.states.back(), a, traj.ts);
    if (!next.q.allFinite() || !next.qd.allFinite()) {
      out.diverged = true;
      out.divergence_step = t;
      break;
    }
    traj.states.push_back(std::move(next));
    traj.actions.push_back(std::move(a));
  }
  return out;
}

double PositionRmse(const RolloutOutcome& outcome,
                    const arm::Trajectory& demo) {
  CheckComparable(outcome, demo);
  if (outcome.diverged) return kInf;
  double sum = 0.0;
  for (size_t t = 0; t < demo.states.size(); ++t) {
    sum += (outcome.rollout.states[t].q - demo.states[t].q).squaredNorm();
  }
  const double d = static_cast<double>(demo.states.front().dof());
  return std::sqrt(sum / (d * static_cast<double>(demo.states.size())));
}

double StateRmse(const RolloutOutcome& outcome, const arm::Trajectory& demo) {
  CheckComparable(outcome, demo);
  if (outcome.diverged) return kInf;
  double sum = 0.0;
  for (size_t t = 0; t < demo.states.size(); ++t) {
    sum += (outcome.rollout.states[t].Stacked() - demo.states[t].Stacked())
               .squaredNorm();
  }
  const double d = static_cast<double>(demo.states.front().dof());
  return std::sqrt(sum / (2.0 * d * static_cast<double>(demo.states.size())));
}

std::vector<double> StateDeviations(const RolloutOutcome& outcome,
                                    const arm::Trajectory& demo) {
  CheckComparable(outcome, demo);
  std::vector<double> dev(demo.states.size(), kInf);
  const size_t n = std::min(dev.size(), outcome.rollout.states.size());
  for (size_t t = 0; t < n; ++t) {
    dev[t] = (outcome.rollout.states[t].Stacked() - demo.states[t].Stacked())
                 .norm();
  }
  return dev;
}

double Quantile(std::vector<double> values, double p) {
  if (values.empty()) throw InvalidArgument("quantile of an empty set");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("quantile p outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  // Avoid inf - inf when both neighbours are infinite.
  if (frac == 0.0 || values[lo] == values[hi]) return values[lo];
  return values[lo] + frac * (values[hi] - values[lo]);
}

DeviationQuantiles DeviationCurve(
    std::span<const std::vector<double>> deviations) {
  if (deviations.empty()) throw InvalidArgument("no deviation series");
  size_t len = 0;
  for (const auto& d : deviations) len = std::max(len, d.size());
  DeviationQuantiles out;
  out.q25.resize(len);
  out.q50.resize(len);
  out.q75.resize(len);
  out.count.resize(len);
  std::vector<double> column;
  for (size_t t = 0; t < len; ++t) {
    column.clear();
    for (const auto& d : deviations) {
      if (t < d.size()) column.push_back(d[t]);
    }
    out.count[t] = static_cast<int>(column.size());
    out.q25[t] = Quantile(column, 0.25);
    out.q50[t] = Quantile(column, 0.5);
    out.q75[t] = Quantile(column, 0.75);
  }
  return out;
}

double FinalGoalDistance(const arm::ArmSpec& arm, const RolloutOutcome& outcome,
                         const arm::Trajectory& demo) {
  if (outcome.diverged) return kInf;
  const Eigen::Vector2d ee =
      arm::EndEffectorPosition(arm, outcome.rollout.states.back().q);
  return (ee - Eigen::Vector2d(demo.meta.goal_ee.x, demo.meta.goal_ee.y))
      .norm();
}

double SuccessRate(const ControllerFactory& factory, const arm::ArmSpec& arm,
                   std::span<const arm::Trajectory> demos, double radius) {
  if (demos.empty()) throw InvalidArgument("no trajectories to evaluate");
  if (!(radius > 0.0)) throw InvalidArgument("success radius must be > 0");
  int hits = 0;
  for (const arm::Trajectory& demo : demos) {
    const RolloutOutcome out = RolloutLike(factory(demo), demo);
    if (FinalGoalDistance(arm, out, demo) < radius) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(demos.size());
}

}  // namespace codeil::evaluation
