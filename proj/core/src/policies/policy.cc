#include "codeil/policies/policy.h"

#include <nlohmann/json.hpp>

#include "codeil/error.h"
#include "codeil/policies/nn_policy.h"
#include "codeil/policies/rmp.h"

namespace codeil::policies {

std::string PolicyClassName(PolicyClass cls) {
  return cls == PolicyClass::kNn ? "nn" : "rmp";
}

PolicyClass ParsePolicyClass(const std::string& name) {
  if (name == "nn") return PolicyClass::kNn;
  if (name == "rmp") return PolicyClass::kRmp;
  throw InvalidArgument("unknown policy class '" + name +
                        "' (valid: nn, rmp)");
}

int Policy::NumParameters() const {
  return diffkit::TotalParameters(Networks());
}

Vector Policy::FlatParameters() const { return diffkit::Flatten(Networks()); }

void Policy::SetFlatParameters(const Vector& flat) {
  diffkit::Unflatten(MutableNetworks(), flat);
}

arm::Controller Policy::AsController() const {
  return [this](const arm::State& state, const arm::TaskMeta& meta) {
    return Act(state, arm::PolicyFeatures(meta));
  };
}

diffkit::Checkpoint ToCheckpoint(const Policy& policy) {
  nlohmann::ordered_json manifest;
  manifest["class"] = PolicyClassName(policy.kind());
  manifest["dof"] = policy.dof();
  manifest["feature_dim"] = policy.feature_dim();
  diffkit::Checkpoint out;
  if (policy.kind() == PolicyClass::kRmp) {
    const auto& rmp = static_cast<const RmpPolicy&>(policy);
    manifest["link_lengths"] = rmp.arm().link_lengths;
    nlohmann::ordered_json subtasks = nlohmann::ordered_json::array();
    for (const RmpSubtask& s : rmp.subtasks()) {
      subtasks.push_back(
          {{"map", RmpMapName(s.map)}, {"diag_offset", s.diag_offset}});
    }
    manifest["subtasks"] = subtasks;
  }
  out.manifest = manifest.dump();
  for (const MlpParams* net : policy.Networks()) out.nets.push_back(*net);
  return out;
}

std::unique_ptr<Policy> FromCheckpoint(const diffkit::Checkpoint& checkpoint) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(checkpoint.manifest);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("policy manifest: ") + e.what());
  }
  try {
    const PolicyClass cls = ParsePolicyClass(manifest.at("class"));
    const int dof = manifest.at("dof");
    const int feature_dim = manifest.at("feature_dim");
    if (cls == PolicyClass::kNn) {
      if (checkpoint.nets.size() != 1) {
        throw DataError("nn policy checkpoint must hold one network");
      }
      return std::make_unique<NnPolicy>(dof, feature_dim, checkpoint.nets[0]);
    }
    arm::ArmSpec arm{manifest.at("link_lengths").get<std::vector<double>>()};
    const auto& list = manifest.at("subtasks");
    if (checkpoint.nets.size() != 2 * list.size()) {
      throw DataError("rmp checkpoint network count does not match subtasks");
    }
    std::vector<RmpSubtask> subtasks;
    for (size_t k = 0; k < list.size(); ++k) {
      RmpSubtask s;
      s.map = ParseRmpMap(list[k].at("map"));
      s.diag_offset = list[k].at("diag_offset");
      s.accel_net = checkpoint.nets[2 * k];
      s.cholesky_net = checkpoint.nets[2 * k + 1];
      subtasks.push_back(std::move(s));
    }
    if (arm.dof() != dof) throw DataError("rmp checkpoint dof mismatch");
    return std::make_unique<RmpPolicy>(std::move(arm), feature_dim,
                                       std::move(subtasks));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("policy manifest: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kData) throw;
    throw DataError(std::string("policy checkpoint: ") + e.what());
  }
}

}  // namespace codeil::policies
