#ifndef CODEIL_ARM_ARM_H_
#define CODEIL_ARM_ARM_H_

#include <vector>

#include <Eigen/Dense>

#include "codeil/diffkit/tape.h"

namespace codeil::arm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Planar serial arm. Link k points along the absolute angle sum_{j<=k} q_j.
struct ArmSpec {
  std::vector<double> link_lengths;

  int dof() const { return static_cast<int>(link_lengths.size()); }
  double reach() const;
  void Validate() const;

  // Two links, 1.0 m and 0.8 m.
  static ArmSpec Default();

  bool operator==(const ArmSpec&) const = default;
};

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  bool operator==(const Pose2&) const = default;
};

// Configuration-space state of an acceleration-driven system.
struct State {
  Vector q;
  Vector qd;

  int dof() const { return static_cast<int>(q.size()); }
  // (q, qd) stacked.
  Vector Stacked() const;
  static State FromStacked(const Vector& s);
};

Pose2 ForwardKinematics(const ArmSpec& arm, const Vector& q);
Eigen::Vector2d EndEffectorPosition(const ArmSpec& arm, const Vector& q);

// 2 x d Jacobian of the end-effector position.
Matrix Jacobian(const ArmSpec& arm, const Vector& q);

// (dJ/dt) qd, the velocity-dependent part of the end-effector acceleration.
Eigen::Vector2d JacobianDotQd(const ArmSpec& arm, const Vector& q,
                              const Vector& qd);

// One step of the discrete-time double integrator:
//   q+ = q + qd ts,  qd+ = qd + a ts.
State Step(const State& state, const Vector& action, double ts);

// Batched kinematics recorded on a tape. q and qd are d x B.
struct TapeKinematics {
  diffkit::Var position;   // 2 x B
  diffkit::Var jacobian;   // 2d x B, row-major 2 x d per column
  diffkit::Var curvature;  // 2 x B, (dJ/dt) qd
};

TapeKinematics RecordKinematics(const ArmSpec& arm, diffkit::Var q,
                                diffkit::Var qd);

}  // namespace codeil::arm

#endif  // CODEIL_ARM_ARM_H_
