#include "codeil/training/losses.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "codeil/error.h"

namespace codeil::training {
namespace {

using diffkit::Matrix;
using diffkit::Vector;

constexpr int kChunk = 1024;

Matrix FeatureColumns(std::span<const arm::Trajectory> demos,
                      std::span<const SampleRef> refs) {
  const Vector first = arm::PolicyFeatures(demos[refs.front().demo].meta);
  Matrix f(first.size(), refs.size());
  for (size_t k = 0; k < refs.size(); ++k) {
    f.col(k) = arm::PolicyFeatures(demos[refs[k].demo].meta);
  }
  return f;
}

void CheckRefs(std::span<const arm::Trajectory> demos,
               std::span<const SampleRef> refs) {
  if (refs.empty()) throw InvalidArgument("empty batch");
  for (const SampleRef& r : refs) {
    if (r.demo < 0 || r.demo >= static_cast<int>(demos.size()) || r.t < 0 ||
        r.t >= demos[r.demo].horizon()) {
      throw InvalidArgument("sample (" + std::to_string(r.demo) + ", " +
                            std::to_string(r.t) + ") is out of range");
    }
  }
}

struct DemoColumns {
  Matrix q, qd, a;
};

DemoColumns Columns(std::span<const arm::Trajectory> demos,
                    std::span<const SampleRef> refs, bool with_actions) {
  const int d = demos[refs.front().demo].states.front().dof();
  DemoColumns c{Matrix(d, refs.size()), Matrix(d, refs.size()), Matrix()};
  if (with_actions) c.a.resize(d, refs.size());
  for (size_t k = 0; k < refs.size(); ++k) {
    const arm::Trajectory& demo = demos[refs[k].demo];
    c.q.col(k) = demo.states[refs[k].t].q;
    c.qd.col(k) = demo.states[refs[k].t].qd;
    if (with_actions) {
      if (!demo.has_actions()) {
        throw InvalidArgument("demonstration " + std::to_string(demo.id) +
                              " has no actions");
      }
      c.a.col(k) = demo.actions[refs[k].t];
    }
  }
  return c;
}

template <typename RecordFn>
LossValues SumChunks(std::span<const arm::Trajectory> demos, int num_params,
                     RecordFn record) {
  const std::vector<SampleRef> all = ActionRefs(demos);
  if (all.empty()) throw InvalidArgument("no time steps to evaluate");
  LossValues sum;
  for (size_t begin = 0; begin < all.size(); begin += kChunk) {
    const size_t n = std::min<size_t>(kChunk, all.size() - begin);
    diffkit::Tape tape(num_params);
    const BatchTerms terms =
        record(tape, std::span<const SampleRef>(all).subspan(begin, n));
    sum.total += terms.total.value()(0, 0);
    if (terms.state_term.valid()) sum.state_term += terms.state_term.value()(0, 0);
    sum.action_term += terms.action_term.value()(0, 0);
  }
  const double scale = 1.0 / (2.0 * static_cast<double>(all.size()));
  sum.total *= scale;
  sum.state_term *= scale;
  sum.action_term *= scale;
  return sum;
}

}  // namespace

std::vector<SampleRef> ActionRefs(std::span<const arm::Trajectory> demos) {
  std::vector<SampleRef> refs;
  for (size_t i = 0; i < demos.size(); ++i) {
    for (int t = 0; t < demos[i].horizon(); ++t) {
      refs.push_back({static_cast<int>(i), t});
    }
  }
  return refs;
}

BatchTerms RecordBcBatch(diffkit::Tape& tape, const policies::Policy& policy,
                         int policy_offset,
                         std::span<const arm::Trajectory> demos,
                         std::span<const SampleRef> refs, double scale) {
  CheckRefs(demos, refs);
  DemoColumns c = Columns(demos, refs, true);
  Var pi = policy.Record(tape, policy_offset, tape.Constant(std::move(c.q)),
                         tape.Constant(std::move(c.qd)),
                         tape.Constant(FeatureColumns(demos, refs)));
  Var action =
      Scale(diffkit::SumSquares(Sub(tape.Constant(std::move(c.a)), pi)), scale);
  return BatchTerms{action, Var(), action};
}

BatchTerms RecordCodeBatch(diffkit::Tape& tape, const policies::Policy& policy,
                           int policy_offset, const auxtraj::AuxTrajectory& aux,
                           int aux_offset,
                           std::span<const arm::Trajectory> demos,
                           std::span<const SampleRef> refs, double nu,
                           double scale) {
  CheckRefs(demos, refs);
  const auxtraj::RecordedSamples rec =
      aux.Record(tape, aux_offset, demos, refs);
  DemoColumns c = Columns(demos, refs, false);
  Var state_sq =
      Add(diffkit::SumSquares(Sub(rec.q, tape.Constant(std::move(c.q)))),
          diffkit::SumSquares(Sub(rec.qd, tape.Constant(std::move(c.qd)))));
  std::vector<SampleRef> finals;
  for (const SampleRef& r : refs) {
    if (r.t == demos[r.demo].horizon() - 1) finals.push_back({r.demo, r.t + 1});
  }
  if (!finals.empty()) {
    const auxtraj::RecordedSamples end =
        aux.Record(tape, aux_offset, demos, finals);
    Matrix q(end.q.rows(), finals.size()), qd(end.q.rows(), finals.size());
    for (size_t k = 0; k < finals.size(); ++k) {
      q.col(k) = demos[finals[k].demo].states[finals[k].t].q;
      qd.col(k) = demos[finals[k].demo].states[finals[k].t].qd;
    }
    state_sq = Add(state_sq,
                   Add(diffkit::SumSquares(Sub(end.q, tape.Constant(std::move(q)))),
                       diffkit::SumSquares(
                           Sub(end.qd, tape.Constant(std::move(qd))))));
  }
  Var pi = policy.Record(tape, policy_offset, rec.q, rec.qd,
                         tape.Constant(FeatureColumns(demos, refs)));
  Var state = Scale(state_sq, scale);
  Var action = Scale(diffkit::SumSquares(Sub(rec.actions, pi)), scale);
  return BatchTerms{Add(state, Scale(action, nu)), state, action};
}

BatchTerms RecordFrozenCodeBatch(diffkit::Tape& tape,
                                 const policies::Policy& policy,
                                 int policy_offset,
                                 std::span<const arm::Trajectory> demos,
                                 std::span<const SampleRef> refs, double nu,
                                 double scale) {
  BatchTerms bc =
      RecordBcBatch(tape, policy, policy_offset, demos, refs, scale);
  Var state = tape.Constant(Matrix::Zero(1, 1));
  return BatchTerms{Add(state, Scale(bc.action_term, nu)), state,
                    bc.action_term};
}

double BcLoss(const policies::Policy& policy,
              std::span<const arm::Trajectory> demos) {
  return SumChunks(demos, policy.NumParameters(),
                   [&](diffkit::Tape& tape, std::span<const SampleRef> refs) {
                     return RecordBcBatch(tape, policy, 0, demos, refs, 1.0);
                   })
      .total;
}

LossValues CodeLoss(const policies::Policy& policy,
                    const auxtraj::AuxTrajectory& aux,
                    std::span<const arm::Trajectory> demos, double nu) {
  if (!(nu > 0.0)) throw InvalidArgument("nu must be > 0");
  const int np = policy.NumParameters();
  return SumChunks(demos, np + aux.NumParameters(),
                   [&](diffkit::Tape& tape, std::span<const SampleRef> refs) {
                     return RecordCodeBatch(tape, policy, 0, aux, np, demos,
                                            refs, nu, 1.0);
                   });
}

std::vector<arm::Trajectory> InjectNoise(std::span<const arm::Trajectory> demos,
                                         double sigma, double fraction,
                                         std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw InvalidArgument("noise fraction must lie in (0, 1]");
  }
  if (!(sigma >= 0.0)) throw InvalidArgument("noise sigma must be >= 0");
  std::vector<arm::Trajectory> out(demos.begin(), demos.end());
  const int n = static_cast<int>(demos.size());
  const int count = std::min(
      n, static_cast<int>(std::ceil(fraction * n - 1e-9)));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(count);
  std::sort(order.begin(), order.end());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i : order) {
    arm::Trajectory noisy = demos[i];
    noisy.expert_generated = false;
    for (arm::State& s : noisy.states) {
      for (Eigen::Index j = 0; j < s.q.size(); ++j) s.q(j) += sigma * normal(rng);
      for (Eigen::Index j = 0; j < s.qd.size(); ++j) s.qd(j) += sigma * normal(rng);
    }
    out.push_back(std::move(noisy));
  }
  return out;
}

}  // namespace codeil::training
