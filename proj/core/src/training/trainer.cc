#include "codeil/training/trainer.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "codeil/diffkit/adam.h"
#include "codeil/format.h"
#include "codeil/training/losses.h"

namespace codeil::training {
namespace {

using diffkit::Vector;

constexpr double kImprovementThreshold = 1e-12;

bool RefLess(const SampleRef& a, const SampleRef& b) {
  return a.demo != b.demo ? a.demo < b.demo : a.t < b.t;
}

// Parameters of the policy followed by those of the auxiliary trajectory.
struct Model {
  std::unique_ptr<policies::Policy> policy;
  std::optional<auxtraj::AuxTrajectory> aux;

  int policy_size() const { return policy->NumParameters(); }
  int size() const {
    return policy_size() + (aux ? aux->NumParameters() : 0);
  }
  Vector Flat() const {
    Vector flat(size());
    flat.head(policy_size()) = policy->FlatParameters();
    if (aux) flat.tail(aux->NumParameters()) = diffkit::Flatten(aux->Networks());
    return flat;
  }
  void Assign(const Vector& flat) {
    policy->SetFlatParameters(flat.head(policy_size()));
    if (aux) diffkit::Unflatten(aux->MutableNetworks(), flat.tail(aux->NumParameters()));
  }
  std::shared_ptr<TrainResult> Snapshot(const TrainHistory& history) const {
    auto out = std::make_shared<TrainResult>();
    out->policy = policy->Clone();
    out->aux = aux;
    out->history = history;
    return out;
  }
};

}  // namespace

std::string TrainHistory::Csv() const {
  std::string out = "epoch,total,state_term,action_term,lr\n";
  for (const EpochRecord& r : epochs) {
    out += std::to_string(r.epoch) + "," + FormatDouble(r.total) + "," +
           FormatDouble(r.state_term) + "," + FormatDouble(r.action_term) +
           "," + FormatDouble(r.lr) + "\n";
  }
  return out;
}

TrainingDiverged::TrainingDiverged(int epoch,
                                   std::shared_ptr<TrainResult> last_finite)
    : Error(ErrorKind::kNumeric,
            "training diverged at epoch " + std::to_string(epoch)),
      epoch_(epoch),
      last_finite_(std::move(last_finite)) {}

TrainResult Train(const TrainConfig& config,
                  std::span<const arm::Trajectory> demos,
                  const policies::Policy& policy_init,
                  const auxtraj::AuxTrajectory* aux_init,
                  const EpochCallback& on_epoch) {
  config.Validate();
  if (demos.empty()) throw InvalidArgument("training needs demonstrations");
  for (const arm::Trajectory& demo : demos) {
    demo.Validate();
    if (demo.ts != demos.front().ts) {
      throw InvalidArgument("demonstrations use different sample times");
    }
  }
  const bool code = config.method == Method::kCode;
  std::vector<arm::Trajectory> noisy;
  if (config.method == Method::kBcNoise) {
    noisy = InjectNoise(demos, config.noise.sigma, config.noise.fraction,
                        config.seed);
    demos = noisy;
  }
  for (const arm::Trajectory& demo : demos) {
    if (!demo.has_actions()) {
      throw InvalidArgument("demonstration " + std::to_string(demo.id) +
                            " has no actions");
    }
  }

  Model model{policy_init.Clone(), std::nullopt};
  if (code) {
    if (aux_init == nullptr) {
      throw InvalidArgument("code training needs an auxiliary trajectory");
    }
    model.aux = *aux_init;
    if (model.aux->dof() != policy_init.dof()) {
      throw InvalidArgument("auxiliary trajectory and policy dof differ");
    }
    if (model.aux->mode() == auxtraj::AuxMode::kIndependent &&
        model.aux->Networks().size() !=
            demos.size() * static_cast<size_t>(model.aux->dof())) {
      throw InvalidArgument("independent auxiliary trajectory was built for a "
                            "different number of demonstrations");
    }
  }
  const int np = model.policy_size();
  const int total_params = model.size();
  Vector params = model.Flat();

  std::vector<SampleRef> steps = ActionRefs(demos);
  const int batch_size = std::min<int>(
      config.ResolvedBatchSize(static_cast<int>(demos.size())), steps.size());
  std::mt19937_64 rng(config.seed);
  diffkit::AdamState joint_state, policy_state, aux_state;
  double lr = config.lr;
  double best = std::numeric_limits<double>::infinity();
  int stale = 0;
  long step_count = 0;
  TrainHistory history;
  Vector last_finite = params;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(steps.begin(), steps.end(), rng);
    double sum_total = 0.0, sum_state = 0.0, sum_action = 0.0;
    bool finite = true;
    for (size_t begin = 0; begin < steps.size() && finite; begin += batch_size) {
      const size_t n = std::min<size_t>(batch_size, steps.size() - begin);
      std::vector<SampleRef> batch(steps.begin() + begin,
                                   steps.begin() + begin + n);
      std::sort(batch.begin(), batch.end(), RefLess);
      diffkit::Tape tape(total_params);
      const double scale = 1.0 / (2.0 * static_cast<double>(n));
      const BatchTerms terms =
          code ? RecordCodeBatch(tape, *model.policy, 0, *model.aux, np, demos,
                                 batch, config.nu, scale)
               : RecordBcBatch(tape, *model.policy, 0, demos, batch, scale);
      const double value = terms.total.value()(0, 0);
      Vector grad = tape.Backward(terms.total);
      if (!std::isfinite(value) || !grad.allFinite()) {
        finite = false;
        break;
      }
      sum_total += value * n;
      if (terms.state_term.valid()) sum_state += terms.state_term.value()(0, 0) * n;
      sum_action += terms.action_term.value()(0, 0) * n;
      if (config.alternating && code) {
        const bool policy_turn = step_count % 2 == 0;
        const int offset = policy_turn ? 0 : np;
        const int len = policy_turn ? np : total_params - np;
        Vector part = params.segment(offset, len);
        diffkit::AdamStep(part, grad.segment(offset, len),
                          policy_turn ? policy_state : aux_state, lr,
                          config.weight_decay);
        params.segment(offset, len) = part;
      } else {
        diffkit::AdamStep(params, grad, joint_state, lr, config.weight_decay);
      }
      ++step_count;
      model.Assign(params);
    }
    if (!finite || !params.allFinite()) {
      model.Assign(last_finite);
      throw TrainingDiverged(epoch, model.Snapshot(history));
    }
    last_finite = params;
    const double count = static_cast<double>(steps.size());
    EpochRecord record{epoch, sum_total / count, sum_state / count,
                       sum_action / count, lr};
    history.epochs.push_back(record);
    if (on_epoch) on_epoch(record);

    if (record.total < best - kImprovementThreshold) {
      best = record.total;
      stale = 0;
    } else if (++stale >= config.plateau_patience) {
      stale = 0;
      if (lr <= config.lr_min) {
        history.stop_reason = "plateau at lr_min";
        break;
      }
      lr = std::max(lr * config.lr_decay, config.lr_min);
    }
  }
  if (history.stop_reason.empty()) history.stop_reason = "max_epochs";
  TrainResult result;
  result.policy = std::move(model.policy);
  result.aux = std::move(model.aux);
  result.history = std::move(history);
  return result;
}

}  // namespace codeil::training
