#include "codeil/evaluation/report.h"

#include <cmath>
#include <sstream>

#include "codeil/error.h"
#include "codeil/format.h"

namespace codeil::evaluation {
namespace {

// JSON has no infinity; non-finite values are written as strings.
Json Num(double x) { return std::isfinite(x) ? Json(x) : Json(FormatDouble(x)); }

void Fill(const arm::ArmSpec& arm, const RolloutOutcome& out,
          const arm::Trajectory& demo, double radius, TrajectoryEval& e) {
  e.id = demo.id;
  e.horizon = demo.horizon();
  e.rmse_position = PositionRmse(out, demo);
  e.rmse_state = StateRmse(out, demo);
  e.diverged = out.diverged;
  e.divergence_step = out.divergence_step;
  e.final_distance = FinalGoalDistance(arm, out, demo);
  e.success = e.final_distance < radius;
  e.deviation = StateDeviations(out, demo);
}

void Aggregate(EvalReport& report) {
  std::vector<std::vector<double>> devs;
  std::vector<double> rmse;
  int hits = 0;
  for (const TrajectoryEval& e : report.trajectories) {
    devs.push_back(e.deviation);
    rmse.push_back(e.rmse_position);
    if (e.success) ++hits;
  }
  report.curve = DeviationCurve(devs);
  report.rmse = Summarize(rmse);
  report.success_rate =
      static_cast<double>(hits) / static_cast<double>(report.trajectories.size());
}

}  // namespace

RmseSummary Summarize(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("nothing to summarize");
  const std::vector<double> v(values.begin(), values.end());
  RmseSummary s;
  s.q25 = Quantile(v, 0.25);
  s.median = Quantile(v, 0.5);
  s.q75 = Quantile(v, 0.75);
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  return s;
}

EvalReport Evaluate(const ControllerFactory& factory, const std::string& name,
                    const arm::ArmSpec& arm,
                    std::span<const arm::Trajectory> demos,
                    double success_radius) {
  if (demos.empty()) throw InvalidArgument("no trajectories to evaluate");
  if (!(success_radius > 0.0)) throw InvalidArgument("success radius must be > 0");
  EvalReport report;
  report.controller = name;
  report.dof = arm.dof();
  report.success_radius = success_radius;
  report.trajectories.resize(demos.size());
  for (size_t i = 0; i < demos.size(); ++i) {
    const RolloutOutcome out = RolloutLike(factory(demos[i]), demos[i]);
    Fill(arm, out, demos[i], success_radius, report.trajectories[i]);
  }
  Aggregate(report);
  return report;
}

EvalReport EvaluatePolicy(const policies::Policy& policy,
                          const arm::ArmSpec& arm,
                          std::span<const arm::Trajectory> demos,
                          const EvalOptions& options) {
  if (policy.dof() != arm.dof()) {
    throw InvalidArgument("policy and arm degrees of freedom differ");
  }
  EvalReport report = Evaluate(
      [&policy](const arm::Trajectory&) { return policy.AsController(); },
      policies::PolicyClassName(policy.kind()), arm, demos,
      options.success_radius);
  if (options.audit) {
    report.audit = TheoremAudit(policy, demos, options.audit_references,
                                AuditLipschitz(policy, demos, options.seed));
  }
  return report;
}

double MedianDeviationAt(const EvalReport& report, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw InvalidArgument("fraction outside [0, 1]");
  }
  std::vector<double> v;
  for (const TrajectoryEval& e : report.trajectories) {
    const int t = static_cast<int>(std::floor(e.horizon * fraction));
    v.push_back(e.deviation[t]);
  }
  return Quantile(v, 0.5);
}

Json ReportJson(const EvalReport& r) {
  Json j;
  j["controller"] = r.controller;
  j["trajectories"] = r.trajectories.size();
  j["success_radius_m"] = r.success_radius;
  j["success_rate"] = r.success_rate;
  j["rmse_position_rad"] = {{"q25", Num(r.rmse.q25)},
                            {"median", Num(r.rmse.median)},
                            {"q75", Num(r.rmse.q75)},
                            {"mean", Num(r.rmse.mean)}};
  int diverged = 0;
  for (const TrajectoryEval& e : r.trajectories) diverged += e.diverged;
  j["diverged"] = diverged;
  j["median_deviation_quarter"] = Num(MedianDeviationAt(r, 0.25));
  j["median_deviation_final"] = Num(MedianDeviationAt(r, 1.0));
  j["normalization"] = {
      {"rmse_position", "sqrt(sum_t |q^_t - q_t|^2 / ((T+1) d)), radians"},
      {"rmse_state", "sqrt(sum_t |s^_t - s_t|^2 / ((T+1) 2d)), s = (q, qd)"},
      {"deviation", "|s^_t - s_t| over the stacked (q, qd) vector"},
      {"deviation_joint", "deviation / sqrt(2d)"},
      {"success", "final end-effector distance to goal < success_radius_m"}};
  if (r.audit) {
    const AuditReport& a = *r.audit;
    j["audit"] = {
        {"lipschitz", Num(a.lipschitz.value)},
        {"lipschitz_source", LipschitzSourceName(a.lipschitz.source)},
        {"reference", a.aux_reference ? "aux" : "demonstrations"},
        {"epsilon", Num(a.epsilon)},
        {"delta", Num(a.delta)},
        {"kappa", Num(a.kappa)},
        {"worst_recursion_margin", Num(a.worst_recursion_margin)},
        {"worst_cumulative_margin", Num(a.worst_cumulative_margin)},
        {"worst_split_margin", Num(a.worst_split_margin)},
        {"worst_reference_bound_margin", Num(a.worst_reference_bound_margin)},
        {"recursion_holds", a.RecursionHolds()},
        {"split_holds", a.SplitHolds()},
        {"tolerance", AuditReport::kTolerance}};
  }
  return j;
}

std::string TrajectoriesCsv(const EvalReport& r) {
  std::ostringstream os;
  os << "id,horizon,rmse_position,rmse_state,diverged,divergence_step,"
        "final_distance,success\n";
  for (const TrajectoryEval& e : r.trajectories) {
    os << e.id << ',' << e.horizon << ',' << FormatDouble(e.rmse_position)
       << ',' << FormatDouble(e.rmse_state) << ',' << (e.diverged ? 1 : 0)
       << ',' << e.divergence_step << ',' << FormatDouble(e.final_distance)
       << ',' << (e.success ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string DeviationCsv(const EvalReport& r) {
  std::ostringstream os;
  os << "t,count,q25,q50,q75,q25_joint,q50_joint,q75_joint\n";
  const double norm = std::sqrt(2.0 * r.dof);
  for (size_t t = 0; t < r.curve.q50.size(); ++t) {
    os << t << ',' << r.curve.count[t] << ',' << FormatDouble(r.curve.q25[t])
       << ',' << FormatDouble(r.curve.q50[t]) << ','
       << FormatDouble(r.curve.q75[t]) << ','
       << FormatDouble(r.curve.q25[t] / norm) << ','
       << FormatDouble(r.curve.q50[t] / norm) << ','
       << FormatDouble(r.curve.q75[t] / norm) << '\n';
  }
  return os.str();
}

std::string AuditCsv(const EvalReport& r) {
  if (!r.audit) return "";
  std::ostringstream os;
  os << "id,horizon,diverged,epsilon,delta,kappa,recursion_margin,"
        "recursion_worst_step,cumulative_margin,split_margin,"
        "reference_bound_margin\n";
  for (const TrajectoryAudit& a : r.audit->trajectories) {
    os << a.id << ',' << a.horizon << ',' << (a.diverged ? 1 : 0) << ','
       << FormatDouble(a.epsilon) << ',' << FormatDouble(a.delta) << ','
       << FormatDouble(a.kappa) << ',' << FormatDouble(a.recursion_margin)
       << ',' << a.recursion_worst_step << ','
       << FormatDouble(a.cumulative_margin) << ','
       << FormatDouble(a.split_margin) << ','
       << FormatDouble(a.reference_bound_margin) << '\n';
  }
  return os.str();
}

}  // namespace codeil::evaluation
