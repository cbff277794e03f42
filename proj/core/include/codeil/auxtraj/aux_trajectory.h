#ifndef CODEIL_AUXTRAJ_AUX_TRAJECTORY_H_
#define CODEIL_AUXTRAJ_AUX_TRAJECTORY_H_

#include <random>
#include <span>
#include <string>
#include <vector>

#include "codeil/arm/trajectory.h"
#include "codeil/diffkit/checkpoint.h"
#include "codeil/diffkit/mlp.h"
#include "codeil/diffkit/tape.h"

namespace codeil::auxtraj {

using diffkit::MlpParams;
using diffkit::Var;
using diffkit::Vector;

enum class AuxMode {
  kJoint,        // one network per joint, shared by all demonstrations
  kIndependent,  // one network per joint per demonstration
};

std::string AuxModeName(AuxMode mode);
AuxMode ParseAuxMode(const std::string& name);

// Boundary data read from a demonstration.
struct Anchors {
  Vector q0, qd0, qT, qdT;
  double duration = 0.0;  // T * ts, seconds
};

Anchors AnchorsOf(const arm::Trajectory& demo);

// Blend coefficients of the boundary-anchored cubic plus the quartic
// envelope tau^2 (D - tau)^2 that multiplies psi.
struct SplineBasis {
  double start_pos, end_pos, start_vel, end_vel, envelope;
};
SplineBasis Basis(double tau, double duration);

// rho(tau) given the psi value at tau.
Vector AnchoredPosition(const Anchors& anchors, const Vector& psi, double tau);

// A position sample and its central-difference velocity.
struct AuxState {
  Vector q;
  Vector qd;
};

// Batched auxiliary samples on a tape, one column per requested sample.
struct RecordedSamples {
  Var q;        // d x B
  Var qd;       // d x B
  Var actions;  // d x B, meaningful where t < T
};

struct SampleRef {
  int demo = 0;  // index into the demonstration list
  int t = 0;
};

class AuxTrajectory {
 public:
  // psi inputs: [tau / D, fk(q0) as (x, y, theta), goal pose, extra features].
  static AuxTrajectory Joint(const arm::ArmSpec& arm, int extra_features,
                             double delta, std::mt19937_64& rng,
                             const std::vector<int>& hidden = {256, 128});
  // psi inputs: [tau / D].
  static AuxTrajectory Independent(const arm::ArmSpec& arm, int num_demos,
                                   double delta, std::mt19937_64& rng,
                                   const std::vector<int>& hidden = {16, 8});

  AuxTrajectory(AuxMode mode, arm::ArmSpec arm, double delta,
                std::vector<MlpParams> nets);

  AuxMode mode() const { return mode_; }
  int dof() const { return arm_.dof(); }
  double delta() const { return delta_; }
  const arm::ArmSpec& arm() const { return arm_; }

  // Network inputs other than time for demonstration `demo`.
  Vector Context(const arm::Trajectory& demo) const;

  Vector Psi(const arm::Trajectory& demo, int index, double tau) const;
  Vector Position(const arm::Trajectory& demo, int index, double tau) const;
  // q~_t = rho(t ts), qd~_t = (rho(t ts + delta) - rho(t ts - delta)) / 2 delta
  AuxState SampleState(const arm::Trajectory& demo, int index, int t) const;
  // a~_t = (qd~_{t+1} - qd~_t) / ts, so the velocity row of the dynamics
  // holds exactly.
  Vector SampleAction(const arm::Trajectory& demo, int index, int t) const;

  // Full auxiliary trajectory as a Trajectory (states and actions).
  arm::Trajectory Export(const arm::Trajectory& demo, int index) const;

  // Largest |q~_{t+1} - (q~_t + qd~_t ts)|, the part of the dynamics the
  // spline does not satisfy by construction.
  double PositionRowResidual(const arm::Trajectory& demo, int index) const;

  // Records samples for `refs`; refs must be sorted by demo index. Parameters
  // sit at `offset` in the flat layout of Networks().
  RecordedSamples Record(diffkit::Tape& tape, int offset,
                         std::span<const arm::Trajectory> demos,
                         std::span<const SampleRef> refs) const;

  std::vector<const MlpParams*> Networks() const;
  std::vector<MlpParams*> MutableNetworks();
  int NumParameters() const;

  diffkit::Checkpoint ToCheckpoint() const;
  static AuxTrajectory FromCheckpoint(const diffkit::Checkpoint& checkpoint);

 private:
  // First network of demonstration `index`.
  int NetBase(int index) const;
  void CheckIndex(int index) const;

  AuxMode mode_;
  arm::ArmSpec arm_;
  double delta_;
  std::vector<MlpParams> nets_;
};

}  // namespace codeil::auxtraj

#endif  // CODEIL_AUXTRAJ_AUX_TRAJECTORY_H_
