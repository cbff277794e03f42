#ifndef CODEIL_POLICIES_RMP_H_
#define CODEIL_POLICIES_RMP_H_

#include <span>
#include <string>
#include <vector>

#include "codeil/policies/policy.h"

namespace codeil::policies {

// Relative eigenvalue cutoff of the pseudo-inverse in RmpResolve.
inline constexpr double kPinvCutoff = 1e-10;
inline constexpr double kDefaultDiagOffset = 1e-5;

enum class RmpMap {
  kEeGoal,          // x = fk(q) - x_goal, n = 2
  kCspaceResidual,  // x = q, n = d
};

std::string RmpMapName(RmpMap map);
RmpMap ParseRmpMap(const std::string& name);

struct RmpSubtask {
  RmpMap map = RmpMap::kEeGoal;
  MlpParams accel_net;     // -> n accelerations
  MlpParams cholesky_net;  // -> n(n+1)/2 lower-triangle entries
  double diag_offset = kDefaultDiagOffset;
};

// One subtask evaluated at a state: desired task acceleration, importance
// weight, task Jacobian and curvature term (dJ/dt) qd.
struct RmpTerm {
  Vector accel;
  Matrix weight;
  Matrix jacobian;
  Vector curvature;
};

struct RmpResolution {
  Vector qdd;
  int rank = 0;
  // All weights vanished: the minimum-norm (zero) solution was returned.
  bool degenerate = false;
};

// Task-space dimension of a map on a d-joint arm.
int TaskDim(RmpMap map, int dof);

// Builds M = L L^T from raw network outputs (row-major lower triangle).
Matrix ImportanceWeight(const Vector& raw, int n, double diag_offset);

RmpTerm EvalSubtask(const RmpSubtask& subtask, const arm::ArmSpec& arm,
                    const arm::State& state, const Vector& features);

// argmin_a sum_k 1/2 |J_k a + curv_k - a_k|^2_{M_k}, computed as
// pinv(sum J^T M J) sum J^T M (a - curv) with an eigenvalue cutoff of
// kPinvCutoff times the largest eigenvalue.
RmpResolution RmpResolve(std::span<const RmpTerm> terms);

// Structured policy fusing an end-effector goal RMP and a configuration-space
// residual RMP.
class RmpPolicy : public Policy {
 public:
  RmpPolicy(arm::ArmSpec arm, int feature_dim, std::vector<RmpSubtask> subtasks);

  // elu networks with 128 and 64 hidden units unless overridden.
  static RmpPolicy Random(const arm::ArmSpec& arm, int feature_dim,
                          std::mt19937_64& rng,
                          const std::vector<int>& hidden = {128, 64});

  PolicyClass kind() const override { return PolicyClass::kRmp; }
  int dof() const override { return arm_.dof(); }
  int feature_dim() const override { return feature_dim_; }

  Vector Act(const arm::State& state, const Vector& features) const override;
  Var Record(diffkit::Tape& tape, int offset, Var q, Var qd,
             Var features) const override;

  std::vector<const MlpParams*> Networks() const override;
  std::vector<MlpParams*> MutableNetworks() override;
  std::unique_ptr<Policy> Clone() const override;

  std::vector<RmpTerm> Terms(const arm::State& state,
                             const Vector& features) const;

  const arm::ArmSpec& arm() const { return arm_; }
  const std::vector<RmpSubtask>& subtasks() const { return subtasks_; }

 private:
  arm::ArmSpec arm_;
  int feature_dim_;
  std::vector<RmpSubtask> subtasks_;
};

}  // namespace codeil::policies

#endif  // CODEIL_POLICIES_RMP_H_
