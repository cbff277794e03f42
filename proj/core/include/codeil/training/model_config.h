#ifndef CODEIL_TRAINING_MODEL_CONFIG_H_
#define CODEIL_TRAINING_MODEL_CONFIG_H_

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "codeil/arm/trajectory.h"
#include "codeil/auxtraj/aux_trajectory.h"
#include "codeil/json_util.h"
#include "codeil/policies/policy.h"

namespace codeil::training {

// Network sizes for freshly initialized policies and auxiliary trajectories.
struct ModelConfig {
  std::vector<int> nn_hidden{256, 128};
  std::vector<int> rmp_hidden{128, 64};
  auxtraj::AuxMode aux_mode = auxtraj::AuxMode::kJoint;
  std::vector<int> joint_hidden{256, 128};
  std::vector<int> independent_hidden{16, 8};
  // Central-difference step of the auxiliary velocity; 0 means ts / 10.
  double aux_delta = 0.0;

  void Validate() const;
};

// Strict: unknown keys are rejected.
ModelConfig ModelConfigFromJson(const Json& json);
Json ToJson(const ModelConfig& config);

// Policy inputs are goal position plus the demonstrations' extra features.
std::unique_ptr<policies::Policy> MakePolicy(
    policies::PolicyClass cls, const ModelConfig& config,
    const arm::ArmSpec& arm, std::span<const arm::Trajectory> demos,
    std::uint64_t seed);

auxtraj::AuxTrajectory MakeAux(const ModelConfig& config,
                               const arm::ArmSpec& arm,
                               std::span<const arm::Trajectory> demos,
                               std::uint64_t seed);

}  // namespace codeil::training

#endif  // CODEIL_TRAINING_MODEL_CONFIG_H_
