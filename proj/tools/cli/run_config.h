#ifndef CODEIL_TOOLS_CLI_RUN_CONFIG_H_
#define CODEIL_TOOLS_CLI_RUN_CONFIG_H_

#include <string>
#include <vector>

#include "codeil/demos/expert.h"
#include "codeil/evaluation/sweep.h"
#include "codeil/json_util.h"
#include "codeil/training/model_config.h"
#include "codeil/training/train_config.h"

namespace codeil::cli {

struct EvalSettings {
  double success_radius = evaluation::kDefaultSuccessRadius;
  // Trailing trajectories held out for evaluation; 0 means none are held out
  // and eval uses every trajectory.
  int validation = 20;
  bool audit = false;
};

// One config file for every command. Sections: arm, sampler, expert, train,
// model, eval, sweep. All optional; unknown keys are rejected.
struct RunConfig {
  demos::GeneratorConfig gen;
  training::TrainConfig train;
  training::ModelConfig model;
  EvalSettings eval;
  evaluation::SweepConfig sweep;
  // Top-level sections missing from the input, filled with defaults.
  std::vector<std::string> defaulted;
};

RunConfig RunConfigFromJson(const Json& json);
// Defaults when `path` is empty.
RunConfig LoadRunConfig(const std::string& path);
Json ToJson(const RunConfig& config);

}  // namespace codeil::cli

#endif  // CODEIL_TOOLS_CLI_RUN_CONFIG_H_
