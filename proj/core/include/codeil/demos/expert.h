#ifndef CODEIL_DEMOS_EXPERT_H_
#define CODEIL_DEMOS_EXPERT_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "codeil/arm/arm.h"
#include "codeil/arm/trajectory.h"
#include "codeil/json_util.h"

namespace codeil::demos {

using diffkit::Vector;
using Vec2 = Eigen::Vector2d;

struct FunnelParams {
  Vec2 v{0.0, -1.0};  // unit approach direction
  double l = 0.3;     // standoff length, m
  double sigma = 0.1;  // funnel std, m
  Vec2 goal{0.0, 0.0};

  void Validate() const;
};

enum class StandoffRule {
  kOffset,     // x_o = x_g - (1 - eta) l v
  kDisplayed,  // x_o = eta x_g - (1 - eta) l v, kept for comparison
};

std::string StandoffRuleName(StandoffRule rule);
StandoffRule ParseStandoffRule(const std::string& name);

// eta = exp(-dx^T (I - v v^T) dx / (2 sigma^2)) with dx = x_g - x.
double FunnelWeight(const Vec2& x, const FunnelParams& funnel);
Vec2 StandoffTarget(const Vec2& x, const FunnelParams& funnel,
                    StandoffRule rule = StandoffRule::kOffset);

// z / sqrt(|z|^2 + radius^2): a smooth unit vector along z, shrinking to
// z / radius inside `radius`.
Vec2 SoftNorm(const Vec2& z, double radius);

struct ExpertParams {
  double kp = 16.0;
  double kd = 8.0;
  double soft_radius = 0.1;
  // Configuration-space damper: accel -damping * qd with weight damper_weight.
  double damping = 2.0;
  double damper_weight = 0.01;
  double y_table = 0.2;
  double lift_height = 0.3;  // h
  double lift_factor = 3.0;  // lifting target sits lift_factor * h above start
  double funnel_sigma = 0.1;
  StandoffRule standoff_rule = StandoffRule::kOffset;
  double eps_goal = 0.02;
  double eps_vel = 0.05;
  int max_steps = 600;
  double ts = 0.01;

  void Validate() const;
};

enum class Phase { kLifting, kApproaching };

struct ReachTask {
  arm::State start;
  Vec2 start_ee;
  Vec2 goal;
};

struct ExpertStep {
  Vector accel;
  Phase phase;  // phase in effect for this step
  Vec2 target;
};

// Advances the state machine at `state`, then resolves the end-effector
// attractor and the configuration-space damper.
ExpertStep ExpertPolicy(const arm::ArmSpec& arm, const arm::State& state,
                        Phase phase, const ReachTask& task,
                        const ExpertParams& params);

// Task a generated demonstration was recorded for.
ReachTask TaskOf(const arm::Trajectory& demo);

// Stateful expert controller for a fresh task; starts in Lifting.
arm::Controller ExpertController(const arm::ArmSpec& arm, const ReachTask& task,
                                 const ExpertParams& params);

struct ExpertOutcome {
  arm::Trajectory trajectory;
  bool reached = false;
  bool lifted = false;
};

// Rolls the expert until the goal and velocity tolerances hold or max_steps
// is hit.
ExpertOutcome RunExpert(const arm::ArmSpec& arm, const ReachTask& task,
                        const ExpertParams& params);

struct TaskSamplerConfig {
  Vec2 goal_center{1.2, 0.6};
  double goal_std = 0.3;
  double reach_margin = 0.15;
  double goal_clearance = 0.05;  // goals sit at least this far above the table
  double first_joint_min = -0.6, first_joint_max = 0.9;
  double other_joint_min = -2.2, other_joint_max = -0.3;
  double start_band = 0.05;  // start ee height within [y_table, y_table + band]
  double start_min_x = 0.4;
  int max_draws = 1000000;

  void Validate() const;
};

// Goal drawn from the Gaussian restricted to the reachable annulus and the
// clearance; start configuration by rejection sampling, at rest.
ReachTask SampleTask(const arm::ArmSpec& arm, const TaskSamplerConfig& sampler,
                     const ExpertParams& expert, std::mt19937_64& rng);

struct GeneratorConfig {
  arm::ArmSpec arm = arm::ArmSpec::Default();
  TaskSamplerConfig sampler;
  ExpertParams expert;
};

// Strict: unknown keys are rejected.
GeneratorConfig GeneratorConfigFromJson(const Json& json);
Json ToJson(const GeneratorConfig& config);

}  // namespace codeil::demos

#endif  // CODEIL_DEMOS_EXPERT_H_
