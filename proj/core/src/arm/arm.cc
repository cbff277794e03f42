#include "codeil/arm/arm.h"

#include <cmath>
#include <numeric>

#include "codeil/error.h"

namespace codeil::arm {

double ArmSpec::reach() const {
  return std::accumulate(link_lengths.begin(), link_lengths.end(), 0.0);
}

void ArmSpec::Validate() const {
  if (link_lengths.size() < 2) {
    throw InvalidArgument("arm needs at least two links");
  }
  for (double l : link_lengths) {
    if (!(l > 0.0) || !std::isfinite(l)) {
      throw InvalidArgument("link lengths must be finite and positive");
    }
  }
}

ArmSpec ArmSpec::Default() { return ArmSpec{{1.0, 0.8}}; }

Vector State::Stacked() const {
  Vector s(q.size() + qd.size());
  s << q, qd;
  return s;
}

State State::FromStacked(const Vector& s) {
  const Eigen::Index d = s.size() / 2;
  return State{s.head(d), s.tail(d)};
}

namespace {

void CheckDof(const ArmSpec& arm, Eigen::Index n, const char* what) {
  if (n != arm.dof()) {
    throw InvalidArgument(std::string(what) + " has length " +
                          std::to_string(n) + ", arm has " +
                          std::to_string(arm.dof()) + " joints");
  }
}

Vector CumulativeAngles(const Vector& q) {
  Vector theta(q.size());
  double acc = 0.0;
  for (Eigen::Index k = 0; k < q.size(); ++k) {
    acc += q(k);
    theta(k) = acc;
  }
  return theta;
}

}  // namespace

Pose2 ForwardKinematics(const ArmSpec& arm, const Vector& q) {
  CheckDof(arm, q.size(), "q");
  const Vector theta = CumulativeAngles(q);
  Pose2 pose;
  for (int k = 0; k < arm.dof(); ++k) {
    pose.x += arm.link_lengths[k] * std::cos(theta(k));
    pose.y += arm.link_lengths[k] * std::sin(theta(k));
  }
  pose.theta = theta(arm.dof() - 1);
  return pose;
}

Eigen::Vector2d EndEffectorPosition(const ArmSpec& arm, const Vector& q) {
  const Pose2 pose = ForwardKinematics(arm, q);
  return {pose.x, pose.y};
}

Matrix Jacobian(const ArmSpec& arm, const Vector& q) {
  CheckDof(arm, q.size(), "q");
  const int d = arm.dof();
  const Vector theta = CumulativeAngles(q);
  Matrix jac(2, d);
  double sx = 0.0;
  double sy = 0.0;
  for (int j = d - 1; j >= 0; --j) {
    sx -= arm.link_lengths[j] * std::sin(theta(j));
    sy += arm.link_lengths[j] * std::cos(theta(j));
    jac(0, j) = sx;
    jac(1, j) = sy;
  }
  return jac;
}

Eigen::Vector2d JacobianDotQd(const ArmSpec& arm, const Vector& q,
                              const Vector& qd) {
  CheckDof(arm, q.size(), "q");
  CheckDof(arm, qd.size(), "qd");
  const Vector theta = CumulativeAngles(q);
  const Vector omega = CumulativeAngles(qd);
  Eigen::Vector2d out = Eigen::Vector2d::Zero();
  for (int k = 0; k < arm.dof(); ++k) {
    const double w2 = omega(k) * omega(k);
    out(0) -= arm.link_lengths[k] * std::cos(theta(k)) * w2;
    out(1) -= arm.link_lengths[k] * std::sin(theta(k)) * w2;
  }
  return out;
}

State Step(const State& state, const Vector& action, double ts) {
  if (!(ts > 0.0)) throw InvalidArgument("sample time must be positive");
  if (action.size() != state.qd.size()) {
    throw InvalidArgument("action has length " + std::to_string(action.size()) +
                          ", state has " + std::to_string(state.qd.size()));
  }
  if (!action.allFinite()) throw NumericError("non-finite action");
  return State{state.q + state.qd * ts, state.qd + action * ts};
}

TapeKinematics RecordKinematics(const ArmSpec& arm, diffkit::Var q,
                                diffkit::Var qd) {
  using diffkit::Var;
  const int d = arm.dof();
  if (q.rows() != d || qd.rows() != d) {
    throw InvalidArgument("RecordKinematics: expected " + std::to_string(d) +
                          " rows");
  }
  std::vector<Var> lcos(d), lsin(d), omega2(d);
  Var theta, omega;
  for (int k = 0; k < d; ++k) {
    theta = k == 0 ? diffkit::Rows(q, 0, 1) : Add(theta, Rows(q, k, 1));
    omega = k == 0 ? diffkit::Rows(qd, 0, 1) : Add(omega, Rows(qd, k, 1));
    lcos[k] = Scale(Cos(theta), arm.link_lengths[k]);
    lsin[k] = Scale(Sin(theta), arm.link_lengths[k]);
    omega2[k] = Square(omega);
  }
  Var x = lcos[0], y = lsin[0];
  Var cx = Mul(lcos[0], omega2[0]), cy = Mul(lsin[0], omega2[0]);
  for (int k = 1; k < d; ++k) {
    x = Add(x, lcos[k]);
    y = Add(y, lsin[k]);
    cx = Add(cx, Mul(lcos[k], omega2[k]));
    cy = Add(cy, Mul(lsin[k], omega2[k]));
  }
  std::vector<Var> jx(d), jy(d);
  for (int j = d - 1; j >= 0; --j) {
    jx[j] = j == d - 1 ? Scale(lsin[j], -1.0) : Sub(jx[j + 1], lsin[j]);
    jy[j] = j == d - 1 ? lcos[j] : Add(jy[j + 1], lcos[j]);
  }
  std::vector<Var> jac_rows = jx;
  jac_rows.insert(jac_rows.end(), jy.begin(), jy.end());
  const Var pos_parts[] = {x, y};
  const Var curv_parts[] = {Scale(cx, -1.0), Scale(cy, -1.0)};
  return TapeKinematics{ConcatRows(pos_parts), ConcatRows(jac_rows),
                        ConcatRows(curv_parts)};
}

}  // namespace codeil::arm
