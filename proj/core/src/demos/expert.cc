#include "codeil/demos/expert.h"

#include <cmath>
#include <memory>

#include "codeil/error.h"
#include "codeil/policies/rmp.h"

namespace codeil::demos {

using diffkit::Matrix;

void FunnelParams::Validate() const {
  if (std::abs(v.norm() - 1.0) > 1e-12) {
    throw InvalidArgument("approach direction must have unit length");
  }
  if (!(l > 0.0)) throw InvalidArgument("standoff length must be > 0");
  if (!(sigma > 0.0)) throw InvalidArgument("funnel sigma must be > 0");
}

std::string StandoffRuleName(StandoffRule rule) {
  return rule == StandoffRule::kOffset ? "offset" : "displayed";
}

StandoffRule ParseStandoffRule(const std::string& name) {
  if (name == "offset") return StandoffRule::kOffset;
  if (name == "displayed") return StandoffRule::kDisplayed;
  throw InvalidArgument("unknown standoff rule '" + name +
                        "' (valid: offset, displayed)");
}

double FunnelWeight(const Vec2& x, const FunnelParams& funnel) {
  const Vec2 dx = funnel.goal - x;
  const Vec2 ortho = dx - funnel.v * funnel.v.dot(dx);
  return std::exp(-ortho.squaredNorm() / (2.0 * funnel.sigma * funnel.sigma));
}

Vec2 StandoffTarget(const Vec2& x, const FunnelParams& funnel,
                    StandoffRule rule) {
  funnel.Validate();
  const double eta = FunnelWeight(x, funnel);
  const Vec2 back = (1.0 - eta) * funnel.l * funnel.v;
  return rule == StandoffRule::kOffset ? Vec2(funnel.goal - back)
                                       : Vec2(eta * funnel.goal - back);
}

Vec2 SoftNorm(const Vec2& z, double radius) {
  return z / std::sqrt(z.squaredNorm() + radius * radius);
}

void ExpertParams::Validate() const {
  if (!(kp > 0.0 && kd > 0.0)) throw InvalidArgument("expert gains must be > 0");
  if (!(soft_radius > 0.0)) throw InvalidArgument("soft_radius must be > 0");
  if (!(damping >= 0.0 && damper_weight > 0.0)) {
    throw InvalidArgument("damper needs damping >= 0 and weight > 0");
  }
  if (!(lift_height > 0.0 && lift_factor >= 1.0)) {
    throw InvalidArgument("need lift_height > 0 and lift_factor >= 1");
  }
  if (!(funnel_sigma > 0.0)) throw InvalidArgument("funnel_sigma must be > 0");
  if (!(eps_goal > 0.0 && eps_vel > 0.0)) {
    throw InvalidArgument("termination tolerances must be > 0");
  }
  if (max_steps < 1) throw InvalidArgument("max_steps must be >= 1");
  if (!(ts > 0.0)) throw InvalidArgument("ts must be > 0");
}

ExpertStep ExpertPolicy(const arm::ArmSpec& arm, const arm::State& state,
                        Phase phase, const ReachTask& task,
                        const ExpertParams& params) {
  const Vec2 x = arm::EndEffectorPosition(arm, state.q);
  if (phase == Phase::kLifting &&
      x.y() >= params.y_table + params.lift_height) {
    phase = Phase::kApproaching;
  }
  Vec2 target;
  if (phase == Phase::kLifting) {
    target = task.start_ee + Vec2(0.0, params.lift_factor * params.lift_height);
  } else {
    FunnelParams funnel;
    funnel.l = params.lift_height;
    funnel.sigma = params.funnel_sigma;
    funnel.goal = task.goal;
    target = StandoffTarget(x, funnel, params.standoff_rule);
  }
  const int d = arm.dof();
  policies::RmpTerm ee;
  ee.jacobian = arm::Jacobian(arm, state.q);
  ee.curvature = arm::JacobianDotQd(arm, state.q, state.qd);
  const Vec2 xd = ee.jacobian * state.qd;
  ee.accel = params.kp * SoftNorm(target - x, params.soft_radius) - params.kd * xd;
  ee.weight = Matrix::Identity(2, 2);
  policies::RmpTerm damper{-params.damping * state.qd,
                           params.damper_weight * Matrix::Identity(d, d),
                           Matrix::Identity(d, d), Vector::Zero(d)};
  const policies::RmpTerm terms[] = {ee, damper};
  return ExpertStep{policies::RmpResolve(terms).qdd, phase, target};
}

ReachTask TaskOf(const arm::Trajectory& demo) {
  if (demo.states.empty()) throw InvalidArgument("empty trajectory");
  return ReachTask{demo.states.front(),
                   Vec2(demo.meta.start_ee.x, demo.meta.start_ee.y),
                   Vec2(demo.meta.goal_ee.x, demo.meta.goal_ee.y)};
}

arm::Controller ExpertController(const arm::ArmSpec& arm, const ReachTask& task,
                                 const ExpertParams& params) {
  auto phase = std::make_shared<Phase>(Phase::kLifting);
  return [=](const arm::State& state, const arm::TaskMeta&) {
    ExpertStep step = ExpertPolicy(arm, state, *phase, task, params);
    *phase = step.phase;
    return step.accel;
  };
}

ExpertOutcome RunExpert(const arm::ArmSpec& arm, const ReachTask& task,
                        const ExpertParams& params) {
  params.Validate();
  ExpertOutcome out;
  arm::Trajectory& traj = out.trajectory;
  traj.ts = params.ts;
  traj.expert_generated = true;
  traj.states.push_back(task.start);
  const arm::Controller expert = ExpertController(arm, task, params);
  const double lift_line = params.y_table + params.lift_height;
  out.lifted = arm::EndEffectorPosition(arm, task.start.q).y() >= lift_line;
  for (int t = 0; t < params.max_steps; ++t) {
    const Vector a = expert(traj.states.back(), traj.meta);
    traj.states.push_back(arm::Step(traj.states.back(), a, params.ts));
    traj.actions.push_back(a);
    const arm::State& s = traj.states.back();
    const Vec2 ee = arm::EndEffectorPosition(arm, s.q);
    if (ee.y() >= lift_line) out.lifted = true;
    if ((ee - task.goal).norm() < params.eps_goal &&
        s.qd.norm() < params.eps_vel) {
      out.reached = true;
      break;
    }
  }
  const arm::Pose2 start = arm::ForwardKinematics(arm, task.start.q);
  const arm::Pose2 end = arm::ForwardKinematics(arm, traj.states.back().q);
  traj.meta.start_ee = start;
  traj.meta.goal_ee = arm::Pose2{task.goal.x(), task.goal.y(), end.theta};
  traj.meta.features = Vector(0);
  return out;
}

void TaskSamplerConfig::Validate() const {
  if (!(goal_std > 0.0)) throw InvalidArgument("goal_std must be > 0");
  if (!(reach_margin >= 0.0 && goal_clearance >= 0.0 && start_band > 0.0)) {
    throw InvalidArgument("sampler margins must be non-negative");
  }
  if (!(first_joint_min < first_joint_max && other_joint_min < other_joint_max)) {
    throw InvalidArgument("joint ranges must be non-empty");
  }
  if (max_draws < 1) throw InvalidArgument("max_draws must be >= 1");
}

ReachTask SampleTask(const arm::ArmSpec& arm, const TaskSamplerConfig& sampler,
                     const ExpertParams& expert, std::mt19937_64& rng) {
  sampler.Validate();
  double inner = 0.0, outer = 0.0;
  for (double l : arm.link_lengths) outer += l;
  inner = arm.link_lengths[0];
  for (size_t k = 1; k < arm.link_lengths.size(); ++k) inner -= arm.link_lengths[k];
  inner = std::max(0.0, inner) + sampler.reach_margin;
  outer -= sampler.reach_margin;
  if (!(inner < outer)) throw InvalidArgument("reach margin leaves no workspace");

  std::normal_distribution<double> normal(0.0, sampler.goal_std);
  ReachTask task;
  int draws = 0;
  for (;; ++draws) {
    if (draws >= sampler.max_draws) {
      throw InvalidArgument("no reachable goal after " +
                            std::to_string(draws) + " draws");
    }
    task.goal = sampler.goal_center + Vec2(normal(rng), normal(rng));
    const double r = task.goal.norm();
    if (r > inner && r < outer &&
        task.goal.y() >= expert.y_table + sampler.goal_clearance) {
      break;
    }
  }
  std::uniform_real_distribution<double> first(sampler.first_joint_min,
                                               sampler.first_joint_max);
  std::uniform_real_distribution<double> other(sampler.other_joint_min,
                                               sampler.other_joint_max);
  const int d = arm.dof();
  for (draws = 0;; ++draws) {
    if (draws >= sampler.max_draws) {
      throw InvalidArgument("no start configuration after " +
                            std::to_string(draws) + " draws");
    }
    Vector q(d);
    q(0) = first(rng);
    for (int k = 1; k < d; ++k) q(k) = other(rng);
    const Vec2 ee = arm::EndEffectorPosition(arm, q);
    if (ee.y() >= expert.y_table && ee.y() <= expert.y_table + sampler.start_band &&
        ee.x() > sampler.start_min_x) {
      task.start = arm::State{q, Vector::Zero(d)};
      task.start_ee = ee;
      return task;
    }
  }
}

namespace {

Json Vec2Json(const Vec2& v) { return Json::array({v.x(), v.y()}); }

Vec2 ReadVec2(const Json& j, const char* key, const std::string& where) {
  std::vector<double> v;
  ReadOptional(j, key, v, where);
  if (v.size() != 2) throw InvalidArgument(where + "." + key + " needs 2 values");
  return Vec2(v[0], v[1]);
}

}  // namespace

GeneratorConfig GeneratorConfigFromJson(const Json& json) {
  RequireKeys(json, {"arm", "sampler", "expert"}, "gen");
  GeneratorConfig c;
  if (json.contains("arm")) {
    const Json& a = json.at("arm");
    RequireKeys(a, {"link_lengths"}, "gen.arm");
    ReadOptional(a, "link_lengths", c.arm.link_lengths, "gen.arm");
  }
  if (json.contains("sampler")) {
    const Json& s = json.at("sampler");
    const std::string w = "gen.sampler";
    RequireKeys(s,
                {"goal_center", "goal_std", "reach_margin", "goal_clearance",
                 "first_joint_range", "other_joint_range", "start_band",
                 "start_min_x", "max_draws"},
                w);
    TaskSamplerConfig& t = c.sampler;
    if (s.contains("goal_center")) t.goal_center = ReadVec2(s, "goal_center", w);
    ReadOptional(s, "goal_std", t.goal_std, w);
    ReadOptional(s, "reach_margin", t.reach_margin, w);
    ReadOptional(s, "goal_clearance", t.goal_clearance, w);
    if (s.contains("first_joint_range")) {
      const Vec2 r = ReadVec2(s, "first_joint_range", w);
      t.first_joint_min = r.x();
      t.first_joint_max = r.y();
    }
    if (s.contains("other_joint_range")) {
      const Vec2 r = ReadVec2(s, "other_joint_range", w);
      t.other_joint_min = r.x();
      t.other_joint_max = r.y();
    }
    ReadOptional(s, "start_band", t.start_band, w);
    ReadOptional(s, "start_min_x", t.start_min_x, w);
    ReadOptional(s, "max_draws", t.max_draws, w);
  }
  if (json.contains("expert")) {
    const Json& e = json.at("expert");
    const std::string w = "gen.expert";
    RequireKeys(e,
                {"kp", "kd", "soft_radius", "damping", "damper_weight",
                 "y_table", "lift_height", "lift_factor", "funnel_sigma",
                 "standoff_rule", "eps_goal", "eps_vel", "max_steps", "ts"},
                w);
    ExpertParams& p = c.expert;
    ReadOptional(e, "kp", p.kp, w);
    ReadOptional(e, "kd", p.kd, w);
    ReadOptional(e, "soft_radius", p.soft_radius, w);
    ReadOptional(e, "damping", p.damping, w);
    ReadOptional(e, "damper_weight", p.damper_weight, w);
    ReadOptional(e, "y_table", p.y_table, w);
    ReadOptional(e, "lift_height", p.lift_height, w);
    ReadOptional(e, "lift_factor", p.lift_factor, w);
    ReadOptional(e, "funnel_sigma", p.funnel_sigma, w);
    std::string rule = StandoffRuleName(p.standoff_rule);
    ReadOptional(e, "standoff_rule", rule, w);
    p.standoff_rule = ParseStandoffRule(rule);
    ReadOptional(e, "eps_goal", p.eps_goal, w);
    ReadOptional(e, "eps_vel", p.eps_vel, w);
    ReadOptional(e, "max_steps", p.max_steps, w);
    ReadOptional(e, "ts", p.ts, w);
  }
  c.arm.Validate();
  c.sampler.Validate();
  c.expert.Validate();
  return c;
}

Json ToJson(const GeneratorConfig& c) {
  Json j;
  j["arm"] = {{"link_lengths", c.arm.link_lengths}};
  const TaskSamplerConfig& t = c.sampler;
  j["sampler"] = {
      {"goal_center", Vec2Json(t.goal_center)},
      {"goal_std", t.goal_std},
      {"reach_margin", t.reach_margin},
      {"goal_clearance", t.goal_clearance},
      {"first_joint_range", {t.first_joint_min, t.first_joint_max}},
      {"other_joint_range", {t.other_joint_min, t.other_joint_max}},
      {"start_band", t.start_band},
      {"start_min_x", t.start_min_x},
      {"max_draws", t.max_draws}};
  const ExpertParams& p = c.expert;
  j["expert"] = {{"kp", p.kp},
                 {"kd", p.kd},
                 {"soft_radius", p.soft_radius},
                 {"damping", p.damping},
                 {"damper_weight", p.damper_weight},
                 {"y_table", p.y_table},
                 {"lift_height", p.lift_height},
                 {"lift_factor", p.lift_factor},
                 {"funnel_sigma", p.funnel_sigma},
                 {"standoff_rule", StandoffRuleName(p.standoff_rule)},
                 {"eps_goal", p.eps_goal},
                 {"eps_vel", p.eps_vel},
                 {"max_steps", p.max_steps},
                 {"ts", p.ts}};
  return j;
}

}  // namespace codeil::demos
