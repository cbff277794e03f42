#ifndef CODEIL_EVALUATION_SWEEP_H_
#define CODEIL_EVALUATION_SWEEP_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "codeil/demos/dataset.h"
#include "codeil/evaluation/report.h"
#include "codeil/json_util.h"
#include "codeil/training/model_config.h"
#include "codeil/training/train_config.h"

namespace codeil::evaluation {

struct SweepConfig {
  std::vector<training::Method> methods{training::Method::kBc,
                                        training::Method::kCode};
  std::vector<policies::PolicyClass> classes{policies::PolicyClass::kNn,
                                             policies::PolicyClass::kRmp};
  std::vector<int> sizes{10, 20, 40, 60};
  std::vector<std::uint64_t> seeds{0, 1, 2};
  // The last `validation` trajectories of the dataset are held out; training
  // subsets are prefixes of the rest.
  int validation = 20;
  double success_radius = kDefaultSuccessRadius;
  // Run the bound audit on every validation rollout.
  bool audit = true;

  void Validate(int dataset_size) const;
};

// Reads methods, classes, sizes and seeds; unknown keys are rejected. The
// evaluation settings are left at their defaults.
SweepConfig SweepConfigFromJson(const Json& json);
Json ToJson(const SweepConfig& config);

struct SweepRow {
  training::Method method = training::Method::kBc;
  policies::PolicyClass cls = policies::PolicyClass::kNn;
  int size = 0;
  std::uint64_t seed = 0;
  std::string run_id;
  bool ok = false;
  std::string error;
  int epochs = 0;
  std::string stop_reason;
  double final_loss = 0.0;
  double min_loss = 0.0;  // smallest epoch loss
  RmseSummary rmse;
  double success_rate = 0.0;
  double dev_quarter = 0.0;  // median deviation at step floor(T/4)
  double dev_final = 0.0;    // median deviation at step T
  // Audit outcome; the recursion only counts when lipschitz is certified.
  std::string lipschitz_source;
  double recursion_margin = 0.0;
  double split_margin = 0.0;
  std::vector<int> validation_ids;
  std::vector<double> rmse_values;  // per validation trajectory
};

struct SweepSetup {
  training::TrainConfig train;  // method and seed are set per run
  training::ModelConfig model;
  SweepConfig sweep;
};

// Trains and evaluates one (method, class, size, seed) cell. Failures are
// reported in the row, not thrown. Writes checkpoints and reports into
// `run_dir` unless it is empty.
SweepRow RunCell(const demos::Dataset& data, const SweepSetup& setup,
                 training::Method method, policies::PolicyClass cls, int size,
                 std::uint64_t seed, const std::string& run_dir);

std::string RunId(training::Method method, policies::PolicyClass cls, int size,
                  std::uint64_t seed);

// Every cell of methods x classes x sizes x seeds, in that nesting order,
// using up to `jobs` threads. Run outputs go to out_dir/runs/<run id>/ when
// out_dir is non-empty. `on_row` is called as rows finish.
std::vector<SweepRow> RunSweep(
    const demos::Dataset& data, const SweepSetup& setup,
    const std::string& out_dir, int jobs,
    const std::function<void(const SweepRow&)>& on_row = nullptr);

// method,policy,aux_mode,size,seed,run_id,status,epochs,stop_reason,
// final_loss,min_loss,rmse_q25,rmse_median,rmse_q75,rmse_mean,success_rate,
// dev_quarter,dev_final,lipschitz_source,recursion_margin,split_margin,error
std::string SweepCsv(const SweepSetup& setup, const std::vector<SweepRow>& rows);
// method,policy,size,seed,id,rmse_position: one line per validation
// trajectory of every successful run.
std::string SweepRmseCsv(const std::vector<SweepRow>& rows);

}  // namespace codeil::evaluation

#endif  // CODEIL_EVALUATION_SWEEP_H_
