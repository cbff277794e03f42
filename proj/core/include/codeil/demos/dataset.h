#ifndef CODEIL_DEMOS_DATASET_H_
#define CODEIL_DEMOS_DATASET_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "codeil/arm/arm.h"
#include "codeil/arm/trajectory.h"
#include "codeil/demos/expert.h"
#include "codeil/json_util.h"

namespace codeil::demos {

inline constexpr std::uint32_t kDatasetVersion = 1;

struct Provenance {
  std::uint64_t seed = 0;
  std::string config_json;    // resolved generator config
  std::string config_digest;  // hex FNV-1a of config_json
};

struct Dataset {
  arm::ArmSpec arm;
  double ts = 0.01;
  std::vector<arm::Trajectory> trajectories;
  Provenance provenance;
};

struct GenerationStats {
  int attempts = 0;
  int rejected = 0;
};

// n expert demonstrations. Sample i draws from its own generator seeded by
// (seed, i), so the result does not depend on generation order. Failed
// rollouts are resampled; more than 20% failures is an error.
Dataset GenerateDataset(int n, const GeneratorConfig& config,
                        std::uint64_t seed, GenerationStats* stats = nullptr);

// Deterministic per-sample generator.
std::mt19937_64 SampleRng(std::uint64_t seed, std::uint64_t index);

std::string EncodeDataset(const Dataset& dataset);
Dataset DecodeDataset(std::string_view bytes);
void SaveDataset(const std::string& path, const Dataset& dataset);
Dataset LoadDataset(const std::string& path);

// Human-readable form for debugging.
Json DatasetToJson(const Dataset& dataset);

}  // namespace codeil::demos

#endif  // CODEIL_DEMOS_DATASET_H_
