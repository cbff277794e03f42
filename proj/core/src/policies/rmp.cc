#include "codeil/policies/rmp.h"

#include <cmath>

#include "codeil/error.h"

namespace codeil::policies {

std::string RmpMapName(RmpMap map) {
  return map == RmpMap::kEeGoal ? "ee_goal" : "cspace_residual";
}

RmpMap ParseRmpMap(const std::string& name) {
  if (name == "ee_goal") return RmpMap::kEeGoal;
  if (name == "cspace_residual") return RmpMap::kCspaceResidual;
  throw InvalidArgument("unknown RMP map '" + name + "'");
}

int TaskDim(RmpMap map, int dof) { return map == RmpMap::kEeGoal ? 2 : dof; }

Matrix ImportanceWeight(const Vector& raw, int n, double diag_offset) {
  if (raw.size() != n * (n + 1) / 2) {
    throw InvalidArgument("cholesky net produced " + std::to_string(raw.size()) +
                          " entries, expected " +
                          std::to_string(n * (n + 1) / 2));
  }
  const double c = diffkit::kDiagonalSmoothing;
  Matrix l = Matrix::Zero(n, n);
  for (int r = 0; r < n; ++r) {
    for (int s = 0; s <= r; ++s) {
      const double z = raw(r * (r + 1) / 2 + s);
      l(r, s) = r == s ? std::sqrt(z * z + c * c) - c + diag_offset : z;
    }
  }
  return l * l.transpose();
}

namespace {

int SubtaskInputDim(RmpMap map, int dof, int feature_dim) {
  return map == RmpMap::kEeGoal ? 4 : 2 * dof + feature_dim;
}

Vector SubtaskInput(RmpMap map, const Vector& x, const Vector& xd,
                    const Vector& features) {
  Vector in(x.size() + xd.size() +
            (map == RmpMap::kEeGoal ? 0 : features.size()));
  if (map == RmpMap::kEeGoal) {
    in << x, xd;
  } else {
    in << x, xd, features;
  }
  return in;
}

}  // namespace

RmpTerm EvalSubtask(const RmpSubtask& subtask, const arm::ArmSpec& arm,
                    const arm::State& state, const Vector& features) {
  const int d = arm.dof();
  const int n = TaskDim(subtask.map, d);
  RmpTerm term;
  Vector x;
  if (subtask.map == RmpMap::kEeGoal) {
    if (features.size() < 2) {
      throw InvalidArgument("ee_goal subtask needs the goal in the features");
    }
    x = arm::EndEffectorPosition(arm, state.q) - features.head(2);
    term.jacobian = arm::Jacobian(arm, state.q);
    term.curvature = arm::JacobianDotQd(arm, state.q, state.qd);
  } else {
    x = state.q;
    term.jacobian = Matrix::Identity(d, d);
    term.curvature = Vector::Zero(d);
  }
  const Vector xd = term.jacobian * state.qd;
  const Vector in = SubtaskInput(subtask.map, x, xd, features);
  term.accel = diffkit::MlpForward(subtask.accel_net, in);
  if (term.accel.size() != n) {
    throw InvalidArgument("accel net produced " +
                          std::to_string(term.accel.size()) +
                          " entries, expected " + std::to_string(n));
  }
  term.weight = ImportanceWeight(diffkit::MlpForward(subtask.cholesky_net, in),
                                 n, subtask.diag_offset);
  return term;
}

RmpResolution RmpResolve(std::span<const RmpTerm> terms) {
  if (terms.empty()) throw InvalidArgument("RmpResolve: no subtasks");
  const Eigen::Index d = terms.front().jacobian.cols();
  Matrix a = Matrix::Zero(d, d);
  Vector b = Vector::Zero(d);
  for (const RmpTerm& term : terms) {
    const Matrix jtm = term.jacobian.transpose() * term.weight;
    a += jtm * term.jacobian;
    b += jtm * (term.accel - term.curvature);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  const Vector& lambda = eig.eigenvalues();
  const double top = lambda.cwiseAbs().maxCoeff();
  RmpResolution out;
  Vector inv = Vector::Zero(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (top > 0.0 && lambda(i) > kPinvCutoff * top) {
      inv(i) = 1.0 / lambda(i);
      ++out.rank;
    }
  }
  out.degenerate = out.rank == 0;
  out.qdd = eig.eigenvectors() *
            (inv.asDiagonal() * (eig.eigenvectors().transpose() * b));
  return out;
}

RmpPolicy::RmpPolicy(arm::ArmSpec arm, int feature_dim,
                     std::vector<RmpSubtask> subtasks)
    : arm_(std::move(arm)),
      feature_dim_(feature_dim),
      subtasks_(std::move(subtasks)) {
  arm_.Validate();
  if (feature_dim_ < 2) {
    throw InvalidArgument("rmp policy needs the goal position as features");
  }
  for (const RmpSubtask& s : subtasks_) {
    const int n = TaskDim(s.map, arm_.dof());
    const int in = SubtaskInputDim(s.map, arm_.dof(), feature_dim_);
    s.accel_net.Validate();
    s.cholesky_net.Validate();
    if (s.accel_net.InputDim() != in || s.accel_net.OutputDim() != n ||
        s.cholesky_net.InputDim() != in ||
        s.cholesky_net.OutputDim() != n * (n + 1) / 2) {
      throw InvalidArgument(RmpMapName(s.map) +
                            " subtask networks have the wrong shape");
    }
  }
}

RmpPolicy RmpPolicy::Random(const arm::ArmSpec& arm, int feature_dim,
                            std::mt19937_64& rng,
                            const std::vector<int>& hidden) {
  std::vector<RmpSubtask> subtasks;
  for (RmpMap map : {RmpMap::kEeGoal, RmpMap::kCspaceResidual}) {
    const int n = TaskDim(map, arm.dof());
    std::vector<int> widths{SubtaskInputDim(map, arm.dof(), feature_dim)};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    RmpSubtask s;
    s.map = map;
    widths.push_back(n);
    s.accel_net = diffkit::MakeMlp(widths, diffkit::Activation::kElu, rng);
    widths.back() = n * (n + 1) / 2;
    s.cholesky_net = diffkit::MakeMlp(widths, diffkit::Activation::kElu, rng);
    subtasks.push_back(std::move(s));
  }
  return RmpPolicy(arm, feature_dim, std::move(subtasks));
}

std::vector<RmpTerm> RmpPolicy::Terms(const arm::State& state,
                                      const Vector& features) const {
  std::vector<RmpTerm> terms;
  for (const RmpSubtask& s : subtasks_) {
    terms.push_back(EvalSubtask(s, arm_, state, features));
  }
  return terms;
}

Vector RmpPolicy::Act(const arm::State& state, const Vector& features) const {
  if (state.q.size() != dof() || features.size() != feature_dim_) {
    throw InvalidArgument("rmp policy input layout mismatch");
  }
  return RmpResolve(Terms(state, features)).qdd;
}

Var RmpPolicy::Record(diffkit::Tape& tape, int offset, Var q, Var qd,
                      Var features) const {
  using diffkit::BatchedMatMul;
  const int d = dof();
  const arm::TapeKinematics kin = arm::RecordKinematics(arm_, q, qd);
  Var goal = diffkit::Rows(features, 0, 2);
  Var a_sum, b_sum;
  for (const RmpSubtask& s : subtasks_) {
    const int n = TaskDim(s.map, d);
    Var in;
    if (s.map == RmpMap::kEeGoal) {
      Var x = Sub(kin.position, goal);
      Var xd = BatchedMatMul(kin.jacobian, qd, 2, d, 1);
      const Var parts[] = {x, xd};
      in = diffkit::ConcatRows(parts);
    } else {
      const Var parts[] = {q, qd, features};
      in = diffkit::ConcatRows(parts);
    }
    Var accel = diffkit::TapeMlp(tape, s.accel_net, offset, in);
    offset += s.accel_net.NumParameters();
    Var raw = diffkit::TapeMlp(tape, s.cholesky_net, offset, in);
    offset += s.cholesky_net.NumParameters();
    Var l = diffkit::LowerTriangular(raw, n, s.diag_offset);
    Var m = BatchedMatMul(l, l, n, n, n, false, true);
    Var a_k, b_k;
    if (s.map == RmpMap::kEeGoal) {
      Var jtm = BatchedMatMul(kin.jacobian, m, d, n, n, true, false);
      a_k = BatchedMatMul(jtm, kin.jacobian, d, n, d);
      b_k = BatchedMatMul(jtm, Sub(accel, kin.curvature), d, n, 1);
    } else {
      a_k = m;
      b_k = BatchedMatMul(m, accel, d, d, 1);
    }
    a_sum = a_sum.valid() ? Add(a_sum, a_k) : a_k;
    b_sum = b_sum.valid() ? Add(b_sum, b_k) : b_k;
  }
  return diffkit::PinvSolve(a_sum, b_sum, d, kPinvCutoff);
}

std::vector<const MlpParams*> RmpPolicy::Networks() const {
  std::vector<const MlpParams*> nets;
  for (const RmpSubtask& s : subtasks_) {
    nets.push_back(&s.accel_net);
    nets.push_back(&s.cholesky_net);
  }
  return nets;
}

std::vector<MlpParams*> RmpPolicy::MutableNetworks() {
  std::vector<MlpParams*> nets;
  for (RmpSubtask& s : subtasks_) {
    nets.push_back(&s.accel_net);
    nets.push_back(&s.cholesky_net);
  }
  return nets;
}

std::unique_ptr<Policy> RmpPolicy::Clone() const {
  return std::make_unique<RmpPolicy>(*this);
}

}  // namespace codeil::policies
