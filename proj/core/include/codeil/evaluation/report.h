#ifndef CODEIL_EVALUATION_REPORT_H_
#define CODEIL_EVALUATION_REPORT_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "codeil/arm/trajectory.h"
#include "codeil/evaluation/audit.h"
#include "codeil/evaluation/metrics.h"
#include "codeil/json_util.h"
#include "codeil/policies/policy.h"

namespace codeil::evaluation {

struct TrajectoryEval {
  int id = 0;
  int horizon = 0;
  double rmse_position = 0.0;  // rad
  double rmse_state = 0.0;
  bool diverged = false;
  int divergence_step = -1;
  double final_distance = 0.0;
  bool success = false;
  std::vector<double> deviation;  // |s^_t - s_t|, t = 0..T
};

struct RmseSummary {
  double q25 = 0.0, median = 0.0, q75 = 0.0, mean = 0.0;
};

struct EvalReport {
  std::string controller;  // "nn", "rmp" or "expert"
  int dof = 0;
  double success_radius = kDefaultSuccessRadius;
  std::vector<TrajectoryEval> trajectories;
  DeviationQuantiles curve;
  double success_rate = 0.0;
  RmseSummary rmse;
  std::optional<AuditReport> audit;
};

struct EvalOptions {
  double success_radius = kDefaultSuccessRadius;
  bool audit = false;
  // One per evaluated trajectory, or empty to audit against the
  // demonstrations themselves.
  std::span<const arm::Trajectory> audit_references;
  std::uint64_t seed = 0;
};

// Rollouts, deviations and success for any controller. No audit.
EvalReport Evaluate(const ControllerFactory& factory, const std::string& name,
                    const arm::ArmSpec& arm,
                    std::span<const arm::Trajectory> demos,
                    double success_radius = kDefaultSuccessRadius);

EvalReport EvaluatePolicy(const policies::Policy& policy,
                          const arm::ArmSpec& arm,
                          std::span<const arm::Trajectory> demos,
                          const EvalOptions& options = {});

RmseSummary Summarize(std::span<const double> values);

// Median over trajectories of the deviation at step floor(T_i * fraction).
double MedianDeviationAt(const EvalReport& report, double fraction);

Json ReportJson(const EvalReport& report);
// id,horizon,rmse_position,rmse_state,diverged,divergence_step,
// final_distance,success
std::string TrajectoriesCsv(const EvalReport& report);
// t,count,q25,q50,q75,q25_joint,q50_joint,q75_joint; the _joint columns are
// divided by sqrt(2d).
std::string DeviationCsv(const EvalReport& report);
// Per-trajectory audit rows; empty when no audit was run.
std::string AuditCsv(const EvalReport& report);

}  // namespace codeil::evaluation

#endif  // CODEIL_EVALUATION_REPORT_H_
