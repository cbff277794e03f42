#include "codeil/evaluation/audit.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "codeil/error.h"
#include "codeil/evaluation/metrics.h"
#include "codeil/policies/nn_policy.h"

namespace codeil::evaluation {
namespace {

using policies::Policy;

arm::State ClosedLoopStep(const Policy& policy, const arm::State& s,
                          const Vector& features, double ts) {
  return arm::Step(s, policy.Act(s, features), ts);
}

// a * b with 0 * inf taken as 0.
double Scaled(double a, double b) { return a == 0.0 ? 0.0 : a * b; }

double Max(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

TrajectoryAudit AuditOne(const Policy& policy, const arm::Trajectory& demo,
                         const arm::Trajectory& ref, double lip) {
  if (ref.states.size() != demo.states.size()) {
    throw InvalidArgument("reference trajectory length differs from demo " +
                          std::to_string(demo.id));
  }
  TrajectoryAudit a;
  a.id = demo.id;
  a.horizon = demo.horizon();
  const RolloutOutcome out = RolloutLike(policy.AsController(), demo);
  a.diverged = out.diverged;
  const size_t n = out.rollout.states.size();

  std::vector<double> dev(n), ref_dev(n), gap(n);
  for (size_t t = 0; t < n; ++t) {
    const Vector roll = out.rollout.states[t].Stacked();
    const Vector s = demo.states[t].Stacked();
    const Vector r = ref.states[t].Stacked();
    dev[t] = (roll - s).norm();
    ref_dev[t] = (r - s).norm();
    gap[t] = (roll - r).norm();
  }
  a.epsilon = Max(OneStepErrors(policy, demo));
  a.delta = Max(OneStepErrors(policy, ref));
  for (size_t t = 0; t < demo.states.size(); ++t) {
    a.kappa = std::max(
        a.kappa, (ref.states[t].Stacked() - demo.states[t].Stacked()).norm());
  }

  a.recursion_margin = std::numeric_limits<double>::infinity();
  for (size_t t = 0; t + 1 < n; ++t) {
    const double m = a.epsilon + lip * dev[t] - dev[t + 1];
    if (m < a.recursion_margin) {
      a.recursion_margin = m;
      a.recursion_worst_step = static_cast<int>(t);
    }
  }

  // geo = sum_{tau<t} L^tau, pow = L^t.
  double geo = 0.0, pow = 1.0;
  double sum_dev = 0.0, sum_bound = 0.0, sum_ref_bound = 0.0;
  double sum_ref = 0.0, sum_gap = 0.0;
  for (size_t t = 0; t < n; ++t) {
    sum_dev += dev[t];
    sum_ref += ref_dev[t];
    sum_gap += gap[t];
    sum_bound += Scaled(a.epsilon, geo);
    sum_ref_bound += a.kappa + Scaled(gap[0], pow) + Scaled(a.delta, geo);
    geo += pow;
    pow *= lip;
  }
  a.cumulative_margin = sum_bound - sum_dev;
  a.split_margin = sum_ref + sum_gap - sum_dev;
  a.reference_bound_margin = sum_ref_bound - sum_dev;
  return a;
}

}  // namespace

std::string LipschitzSourceName(LipschitzSource source) {
  return source == LipschitzSource::kCertified ? "certified" : "estimated";
}

std::vector<double> OneStepErrors(const Policy& policy,
                                  const arm::Trajectory& traj) {
  const Vector features = arm::PolicyFeatures(traj.meta);
  std::vector<double> err(std::max(traj.horizon(), 0));
  for (int t = 0; t < traj.horizon(); ++t) {
    err[t] = (traj.states[t + 1].Stacked() -
              ClosedLoopStep(policy, traj.states[t], features, traj.ts)
                  .Stacked())
                 .norm();
  }
  return err;
}

double EstimateLipschitz(const Policy& policy,
                         std::span<const arm::Trajectory> demos, int samples,
                         double radius, std::uint64_t seed) {
  if (demos.empty()) throw InvalidArgument("no trajectories for estimation");
  if (samples < 1 || !(radius > 0.0)) {
    throw InvalidArgument("need samples >= 1 and radius > 0");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<size_t> pick_demo(0, demos.size() - 1);
  std::normal_distribution<double> normal;
  double best = 0.0;
  for (int k = 0; k < samples; ++k) {
    const arm::Trajectory& demo = demos[pick_demo(rng)];
    std::uniform_int_distribution<int> pick_t(0, demo.horizon());
    const arm::State& s = demo.states[pick_t(rng)];
    const int d = s.dof();
    Vector u(2 * d);
    for (int i = 0; i < 2 * d; ++i) u(i) = normal(rng);
    u *= radius * std::max(1.0, s.Stacked().norm()) / u.norm();
    const arm::State p{s.q + u.head(d), s.qd + u.tail(d)};
    const Vector features = arm::PolicyFeatures(demo.meta);
    const double num = (ClosedLoopStep(policy, s, features, demo.ts).Stacked() -
                        ClosedLoopStep(policy, p, features, demo.ts).Stacked())
                           .norm();
    best = std::max(best, num / u.norm());
  }
  return best;
}

LipschitzConstant AuditLipschitz(const Policy& policy,
                                 std::span<const arm::Trajectory> demos,
                                 std::uint64_t seed) {
  if (demos.empty()) throw InvalidArgument("no trajectories to audit");
  if (const auto* nn = dynamic_cast<const policies::NnPolicy*>(&policy)) {
    return {policies::PolicyLipschitz(*nn, demos.front().ts),
            LipschitzSource::kCertified};
  }
  return {EstimateLipschitz(policy, demos, 2000, 1e-3, seed),
          LipschitzSource::kEstimated};
}

AuditReport TheoremAudit(const Policy& policy,
                         std::span<const arm::Trajectory> demos,
                         std::span<const arm::Trajectory> references,
                         const LipschitzConstant& lipschitz) {
  if (demos.empty()) throw InvalidArgument("no trajectories to audit");
  if (!references.empty() && references.size() != demos.size()) {
    throw InvalidArgument("need one reference trajectory per demonstration");
  }
  if (!(lipschitz.value > 0.0)) throw InvalidArgument("Lipschitz constant must be > 0");
  AuditReport report;
  report.lipschitz = lipschitz;
  report.aux_reference = !references.empty();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  report.worst_recursion_margin = kInf;
  report.worst_cumulative_margin = kInf;
  report.worst_split_margin = kInf;
  report.worst_reference_bound_margin = kInf;
  for (size_t i = 0; i < demos.size(); ++i) {
    const arm::Trajectory& ref = references.empty() ? demos[i] : references[i];
    TrajectoryAudit a = AuditOne(policy, demos[i], ref, lipschitz.value);
    report.epsilon = std::max(report.epsilon, a.epsilon);
    report.delta = std::max(report.delta, a.delta);
    report.kappa = std::max(report.kappa, a.kappa);
    report.worst_recursion_margin =
        std::min(report.worst_recursion_margin, a.recursion_margin);
    report.worst_cumulative_margin =
        std::min(report.worst_cumulative_margin, a.cumulative_margin);
    report.worst_split_margin =
        std::min(report.worst_split_margin, a.split_margin);
    report.worst_reference_bound_margin = std::min(
        report.worst_reference_bound_margin, a.reference_bound_margin);
    report.trajectories.push_back(std::move(a));
  }
  return report;
}

}  // namespace codeil::evaluation
