#include "codeil/training/model_config.h"

#include <random>

#include "codeil/error.h"
#include "codeil/policies/nn_policy.h"
#include "codeil/policies/rmp.h"

namespace codeil::training {
namespace {

void CheckWidths(const std::vector<int>& widths, const char* name) {
  for (int w : widths) {
    if (w < 1) throw InvalidArgument(std::string(name) + " widths must be >= 1");
  }
}

int ExtraFeatures(std::span<const arm::Trajectory> demos) {
  if (demos.empty()) throw InvalidArgument("no demonstrations");
  const auto n = demos.front().meta.features.size();
  for (const arm::Trajectory& d : demos) {
    if (d.meta.features.size() != n) {
      throw DataError("demonstrations disagree on feature size");
    }
  }
  return static_cast<int>(n);
}

// Distinct streams for policy and auxiliary initialization.
std::mt19937_64 InitRng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

}  // namespace

void ModelConfig::Validate() const {
  CheckWidths(nn_hidden, "nn_hidden");
  CheckWidths(rmp_hidden, "rmp_hidden");
  CheckWidths(joint_hidden, "joint_hidden");
  CheckWidths(independent_hidden, "independent_hidden");
  if (!(aux_delta >= 0.0)) throw InvalidArgument("aux_delta must be >= 0");
}

ModelConfig ModelConfigFromJson(const Json& json) {
  const std::string where = "model";
  RequireKeys(json,
              {"nn_hidden", "rmp_hidden", "aux_mode", "joint_hidden",
               "independent_hidden", "aux_delta"},
              where);
  ModelConfig c;
  ReadOptional(json, "nn_hidden", c.nn_hidden, where);
  ReadOptional(json, "rmp_hidden", c.rmp_hidden, where);
  std::string mode = auxtraj::AuxModeName(c.aux_mode);
  ReadOptional(json, "aux_mode", mode, where);
  c.aux_mode = auxtraj::ParseAuxMode(mode);
  ReadOptional(json, "joint_hidden", c.joint_hidden, where);
  ReadOptional(json, "independent_hidden", c.independent_hidden, where);
  ReadOptional(json, "aux_delta", c.aux_delta, where);
  c.Validate();
  return c;
}

Json ToJson(const ModelConfig& c) {
  Json j;
  j["nn_hidden"] = c.nn_hidden;
  j["rmp_hidden"] = c.rmp_hidden;
  j["aux_mode"] = auxtraj::AuxModeName(c.aux_mode);
  j["joint_hidden"] = c.joint_hidden;
  j["independent_hidden"] = c.independent_hidden;
  j["aux_delta"] = c.aux_delta;
  return j;
}

std::unique_ptr<policies::Policy> MakePolicy(
    policies::PolicyClass cls, const ModelConfig& config,
    const arm::ArmSpec& arm, std::span<const arm::Trajectory> demos,
    std::uint64_t seed) {
  config.Validate();
  const int features = 2 + ExtraFeatures(demos);
  std::mt19937_64 rng = InitRng(seed, 1);
  if (cls == policies::PolicyClass::kNn) {
    return std::make_unique<policies::NnPolicy>(policies::NnPolicy::Random(
        arm.dof(), features, rng, config.nn_hidden));
  }
  return std::make_unique<policies::RmpPolicy>(
      policies::RmpPolicy::Random(arm, features, rng, config.rmp_hidden));
}

auxtraj::AuxTrajectory MakeAux(const ModelConfig& config,
                               const arm::ArmSpec& arm,
                               std::span<const arm::Trajectory> demos,
                               std::uint64_t seed) {
  config.Validate();
  const int extra = ExtraFeatures(demos);
  const double delta =
      config.aux_delta > 0.0 ? config.aux_delta : demos.front().ts / 10.0;
  std::mt19937_64 rng = InitRng(seed, 2);
  if (config.aux_mode == auxtraj::AuxMode::kJoint) {
    return auxtraj::AuxTrajectory::Joint(arm, extra, delta, rng,
                                         config.joint_hidden);
  }
  return auxtraj::AuxTrajectory::Independent(
      arm, static_cast<int>(demos.size()), delta, rng,
      config.independent_hidden);
}

}  // namespace codeil::training
