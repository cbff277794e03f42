#ifndef CODEIL_POLICIES_POLICY_H_
#define CODEIL_POLICIES_POLICY_H_

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "codeil/arm/arm.h"
#include "codeil/arm/trajectory.h"
#include "codeil/diffkit/checkpoint.h"
#include "codeil/diffkit/mlp.h"
#include "codeil/diffkit/tape.h"

namespace codeil::policies {

using diffkit::Matrix;
using diffkit::MlpParams;
using diffkit::Var;
using diffkit::Vector;

enum class PolicyClass { kNn, kRmp };

std::string PolicyClassName(PolicyClass cls);
PolicyClass ParsePolicyClass(const std::string& name);

// A learned acceleration policy pi(q, qd, features). Both classes share this
// contract so training, rollout and evaluation treat them alike.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual PolicyClass kind() const = 0;
  virtual int dof() const = 0;
  virtual int feature_dim() const = 0;

  virtual Vector Act(const arm::State& state, const Vector& features) const = 0;

  // Batched evaluation on a tape. q, qd are d x B and features m x B; the
  // policy's parameters live at `offset` in the flat layout of Networks().
  virtual Var Record(diffkit::Tape& tape, int offset, Var q, Var qd,
                     Var features) const = 0;

  virtual std::vector<const MlpParams*> Networks() const = 0;
  virtual std::vector<MlpParams*> MutableNetworks() = 0;
  virtual std::unique_ptr<Policy> Clone() const = 0;

  int NumParameters() const;
  Vector FlatParameters() const;
  void SetFlatParameters(const Vector& flat);

  // The returned controller holds a reference to this policy.
  arm::Controller AsController() const;
};

// Saves class tag, layout dims and subtask list in the manifest.
diffkit::Checkpoint ToCheckpoint(const Policy& policy);
std::unique_ptr<Policy> FromCheckpoint(const diffkit::Checkpoint& checkpoint);

}  // namespace codeil::policies

#endif  // CODEIL_POLICIES_POLICY_H_
