#ifndef CODEIL_TRAINING_TRAINER_H_
#define CODEIL_TRAINING_TRAINER_H_

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "codeil/arm/trajectory.h"
#include "codeil/auxtraj/aux_trajectory.h"
#include "codeil/error.h"
#include "codeil/policies/policy.h"
#include "codeil/training/train_config.h"

namespace codeil::training {

struct EpochRecord {
  int epoch = 0;
  double total = 0.0;
  double state_term = 0.0;
  double action_term = 0.0;
  double lr = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::string stop_reason;

  // epoch,total,state_term,action_term,lr with round-trip precision.
  std::string Csv() const;
};

struct TrainResult {
  std::unique_ptr<policies::Policy> policy;
  std::optional<auxtraj::AuxTrajectory> aux;
  TrainHistory history;
};

// Thrown on a non-finite loss or gradient. Carries the parameters from the
// end of the last finite epoch.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(int epoch, std::shared_ptr<TrainResult> last_finite);
  int epoch() const { return epoch_; }
  const TrainResult& last_finite() const { return *last_finite_; }

 private:
  int epoch_;
  std::shared_ptr<TrainResult> last_finite_;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Mini-batch Adam over time steps of all demonstrations. An epoch is one
// shuffled pass over every step t < T. The epoch loss is the mean batch loss;
// when it stays above (best - 1e-12) for plateau_patience epochs the learning
// rate is multiplied by lr_decay, never going below lr_min. A plateau at
// lr_min ends training.
//
// `aux_init` is required for code and ignored otherwise. bc_noise trains on
// InjectNoise(demos) seeded from config.seed.
TrainResult Train(const TrainConfig& config,
                  std::span<const arm::Trajectory> demos,
                  const policies::Policy& policy_init,
                  const auxtraj::AuxTrajectory* aux_init,
                  const EpochCallback& on_epoch = nullptr);

}  // namespace codeil::training

#endif  // CODEIL_TRAINING_TRAINER_H_
