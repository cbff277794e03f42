#ifndef CODEIL_TRAINING_TRAIN_CONFIG_H_
#define CODEIL_TRAINING_TRAIN_CONFIG_H_

#include <cstdint>
#include <string>

#include "codeil/json_util.h"

namespace codeil::training {

enum class Method { kBc, kBcNoise, kCode };

std::string MethodName(Method method);
Method ParseMethod(const std::string& name);

struct NoiseConfig {
  double sigma = 0.05;
  double fraction = 0.2;
};

struct TrainConfig {
  Method method = Method::kCode;
  // Weight of the action term in the collocation loss; nu = lambda * ts^2.
  double nu = 1.0;
  double lr = 5e-3;
  double weight_decay = 1e-10;
  double lr_decay = 0.9;
  int plateau_patience = 500;
  double lr_min = 1e-6;
  int max_epochs = 50000;
  // 0 picks 500 below 50 trajectories and 2000 otherwise.
  int batch_size = 0;
  NoiseConfig noise;
  std::uint64_t seed = 0;
  // Alternate policy and auxiliary updates instead of one joint step.
  bool alternating = false;

  void Validate() const;
  int ResolvedBatchSize(int num_trajectories) const;
};

double NuFromLambda(double lambda, double ts);

// Strict: unknown keys are rejected. Missing keys keep their defaults.
TrainConfig TrainConfigFromJson(const Json& json);
Json ToJson(const TrainConfig& config);

}  // namespace codeil::training

#endif  // CODEIL_TRAINING_TRAIN_CONFIG_H_
