#include <cmath>
#include <cstring>
#include <random>

#include <gtest/gtest.h>

#include "codeil/binary_io.h"
#include "codeil/demos/dataset.h"
#include "codeil/demos/expert.h"
#include "codeil/error.h"

namespace codeil::demos {
namespace {

FunnelParams Funnel() {
  FunnelParams f;
  f.v = Vec2(0.0, -1.0);
  f.l = 0.3;
  f.sigma = 0.1;
  f.goal = Vec2(1.0, 0.5);
  return f;
}

TEST(StandoffTest, OnTheApproachLineTargetsTheGoal) {
  const FunnelParams f = Funnel();
  EXPECT_EQ(FunnelWeight(Vec2(1.0, 0.9), f), 1.0);
  EXPECT_EQ(StandoffTarget(Vec2(1.0, 0.9), f), f.goal);
}

TEST(StandoffTest, FarFromTheLineOffsetsBackAlongApproach) {
  const FunnelParams f = Funnel();
  const Vec2 far = StandoffTarget(Vec2(3.0, 0.2), f);
  EXPECT_LT((far - (f.goal - f.l * f.v)).norm(), 1e-12);
  // The displayed variant drops the goal far from the line.
  const Vec2 displayed = StandoffTarget(Vec2(3.0, 0.2), f, StandoffRule::kDisplayed);
  EXPECT_LT((displayed - (-f.l * f.v)).norm(), 1e-12);
}

TEST(StandoffTest, OneSigmaFromTheLine) {
  const FunnelParams f = Funnel();
  const Vec2 x(1.0 + f.sigma, 0.1);
  const double eta = FunnelWeight(x, f);
  EXPECT_NEAR(eta, std::exp(-0.5), 1e-15);
  EXPECT_NEAR(eta, 0.6065, 1e-4);
  EXPECT_LT((StandoffTarget(x, f) - (f.goal - (1 - eta) * f.l * f.v)).norm(),
            1e-15);
}

TEST(StandoffTest, ContinuousWithinLipschitzBound) {
  const FunnelParams f = Funnel();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 3.0), small(-0.05, 0.05);
  for (int i = 0; i < 5000; ++i) {
    const Vec2 a(u(rng), u(rng));
    const Vec2 b = a + Vec2(small(rng), small(rng));
    EXPECT_LE((StandoffTarget(a, f) - StandoffTarget(b, f)).norm(),
              f.l / f.sigma * (a - b).norm() + 1e-15);
  }
}

TEST(StandoffTest, InvalidFunnelIsRejected) {
  FunnelParams f = Funnel();
  f.v = Vec2(0.0, -1.1);
  EXPECT_THROW(StandoffTarget(Vec2::Zero(), f), Error);
  f = Funnel();
  f.sigma = 0.0;
  EXPECT_THROW(StandoffTarget(Vec2::Zero(), f), Error);
}

TEST(SoftNormTest, SaturatesToUnitLength) {
  EXPECT_NEAR(SoftNorm(Vec2(100.0, 0.0), 0.1).norm(), 1.0, 1e-6);
  EXPECT_NEAR(SoftNorm(Vec2(1e-6, 0.0), 0.1).x(), 1e-5, 1e-12);
  EXPECT_EQ(SoftNorm(Vec2::Zero(), 0.1), Vec2::Zero());
}

ReachTask TaskAt(const arm::ArmSpec& arm, const Vector& q, const Vec2& goal) {
  ReachTask task;
  task.start = arm::State{q, Vector::Zero(q.size())};
  task.start_ee = arm::EndEffectorPosition(arm, q);
  task.goal = goal;
  return task;
}

TEST(ExpertTest, LiftsBeforeTheHeightThreshold) {
  const arm::ArmSpec arm = arm::ArmSpec::Default();
  Vector q(2);
  q << 0.3, -1.2;
  const ReachTask task = TaskAt(arm, q, Vec2(1.2, 0.6));
  ExpertParams params;
  params.y_table = task.start_ee.y() - 0.1;
  const ExpertStep step =
      ExpertPolicy(arm, task.start, Phase::kLifting, task, params);
  EXPECT_EQ(step.phase, Phase::kLifting);
  EXPECT_EQ(step.target,
            task.start_ee + Vec2(0.0, params.lift_factor * params.lift_height));
}

TEST(ExpertTest, SwitchesToApproachingExactlyAtTheThreshold) {
  const arm::ArmSpec arm = arm::ArmSpec::Default();
  Vector q(2);
  q << 0.5, -1.0;
  const ReachTask task = TaskAt(arm, q, Vec2(1.2, 0.6));
  ExpertParams params;
  params.lift_height = 0.25;
  params.y_table = task.start_ee.y() - 0.25;
  ASSERT_EQ(params.y_table + params.lift_height, task.start_ee.y());
  EXPECT_EQ(ExpertPolicy(arm, task.start, Phase::kLifting, task, params).phase,
            Phase::kApproaching);
}

TEST(ExpertTest, GoalAtRestIsAnEquilibrium) {
  const arm::ArmSpec arm = arm::ArmSpec::Default();
  Vector q(2);
  q << 0.4, -1.1;
  const ReachTask task = TaskAt(arm, q, arm::EndEffectorPosition(arm, q));
  const ExpertStep step =
      ExpertPolicy(arm, task.start, Phase::kApproaching, task, ExpertParams{});
  EXPECT_LT(step.accel.norm(), 1e-6);
}

TEST(ExpertTest, ControllerStartsInLiftingForEveryTask) {
  const arm::ArmSpec arm = arm::ArmSpec::Default();
  Vector q(2);
  q << 0.4, -1.1;
  ExpertParams params;
  const ReachTask task = TaskAt(arm, q, Vec2(0.6, 1.0));
  params.y_table = task.start_ee.y() - 0.01;
  const Vector a =
      ExpertController(arm, task, params)(task.start, arm::TaskMeta{});
  const ExpertStep lifting =
      ExpertPolicy(arm, task.start, Phase::kLifting, task, params);
  EXPECT_EQ(a, lifting.accel);
}

TEST(SamplerTest, GoalsReachableAndStartsOnTheTable) {
  const GeneratorConfig config;
  std::mt19937_64 rng(2);
  for (int i = 0; i < 300; ++i) {
    const ReachTask task =
        SampleTask(config.arm, config.sampler, config.expert, rng);
    const double r = task.goal.norm();
    EXPECT_GT(r, 0.2 + config.sampler.reach_margin);
    EXPECT_LT(r, 1.8 - config.sampler.reach_margin);
    EXPECT_GE(task.goal.y(), config.expert.y_table + config.sampler.goal_clearance);
    EXPECT_GE(task.start_ee.y(), config.expert.y_table);
    EXPECT_LE(task.start_ee.y(), config.expert.y_table + config.sampler.start_band);
    EXPECT_GT(task.start_ee.x(), config.sampler.start_min_x);
    EXPECT_TRUE(task.start.qd.isZero(0.0));
  }
}

TEST(GenerateTest, SingleDemoReachesGoalDeterministically) {
  const GeneratorConfig config;
  const Dataset a = GenerateDataset(1, config, 5);
  const Dataset b = GenerateDataset(1, config, 5);
  ASSERT_EQ(a.trajectories.size(), 1u);
  const arm::Trajectory& t = a.trajectories[0];
  const Vec2 goal(t.meta.goal_ee.x, t.meta.goal_ee.y);
  EXPECT_LT((arm::EndEffectorPosition(a.arm, t.states.back().q) - goal).norm(),
            config.expert.eps_goal);
  EXPECT_LE(t.horizon(), config.expert.max_steps);
  EXPECT_EQ(EncodeDataset(a), EncodeDataset(b));
}

TEST(GenerateTest, DemonstrationsAreConsistentAndLifted) {
  const GeneratorConfig config;
  GenerationStats stats;
  const Dataset data = GenerateDataset(12, config, 6, &stats);
  EXPECT_EQ(stats.attempts - stats.rejected, 12);
  for (const arm::Trajectory& t : data.trajectories) {
    EXPECT_NO_THROW(t.Validate(1e-9));
    bool lifted = false;
    for (const arm::State& s : t.states) {
      lifted |= arm::EndEffectorPosition(data.arm, s.q).y() >=
                config.expert.y_table + config.expert.lift_height;
    }
    EXPECT_TRUE(lifted);
  }
}

TEST(GenerateTest, SamplesDoNotDependOnCount) {
  const GeneratorConfig config;
  const Dataset three = GenerateDataset(3, config, 8);
  const Dataset one = GenerateDataset(1, config, 8);
  EXPECT_EQ(three.trajectories[0].states.back().Stacked(),
            one.trajectories[0].states.back().Stacked());
}

TEST(GenerateTest, MisconfiguredExpertIsAnError) {
  GeneratorConfig config;
  config.expert.max_steps = 5;
  EXPECT_THROW(GenerateDataset(2, config, 1), Error);
  EXPECT_THROW(GenerateDataset(0, GeneratorConfig{}, 1), Error);
}

// Replaces the checksum so the payload edit is not caught by it.
std::string Reseal(std::string bytes) {
  const std::uint64_t sum =
      Fnv1a(std::string_view(bytes).substr(0, bytes.size() - 8));
  std::memcpy(bytes.data() + bytes.size() - 8, &sum, 8);
  return bytes;
}

TEST(DatasetFileTest, RoundTripIsBitwise) {
  const Dataset data = GenerateDataset(2, GeneratorConfig{}, 9);
  const std::string bytes = EncodeDataset(data);
  const Dataset back = DecodeDataset(bytes);
  EXPECT_EQ(back.arm, data.arm);
  EXPECT_EQ(back.provenance.config_digest, data.provenance.config_digest);
  EXPECT_EQ(back.provenance.seed, 9u);
  ASSERT_EQ(back.trajectories.size(), 2u);
  for (size_t i = 0; i < 2; ++i) {
    const arm::Trajectory& x = back.trajectories[i];
    const arm::Trajectory& y = data.trajectories[i];
    EXPECT_EQ(x.meta.goal_ee, y.meta.goal_ee);
    ASSERT_EQ(x.states.size(), y.states.size());
    for (size_t t = 0; t < x.states.size(); ++t) {
      EXPECT_EQ(std::memcmp(x.states[t].q.data(), y.states[t].q.data(), 16), 0);
    }
    EXPECT_EQ(x.actions.back(), y.actions.back());
  }
  EXPECT_EQ(EncodeDataset(back), bytes);
  EXPECT_FALSE(DatasetToJson(data).dump().empty());
}

TEST(DatasetFileTest, CorruptLengthAndOldVersionAreRejected) {
  const Dataset data = GenerateDataset(1, GeneratorConfig{}, 10);
  const std::string bytes = EncodeDataset(data);
  std::string old = bytes;
  const std::uint32_t zero = 0;
  std::memcpy(old.data() + 8, &zero, 4);
  try {
    DecodeDataset(Reseal(old));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
    EXPECT_NE(std::string(e.what()).find("unsupported version"),
              std::string::npos);
  }
  // Horizon field of the first trajectory.
  const size_t header = 8 + 4 + 8 + 4 + 16 + 8 +
                        (4 + data.provenance.config_digest.size()) +
                        (4 + data.provenance.config_json.size()) + 4;
  std::string longer = bytes;
  const std::uint32_t huge = 1u << 30;
  std::memcpy(longer.data() + header + 8 + 8, &huge, 4);
  EXPECT_THROW(DecodeDataset(Reseal(longer)), Error);
  EXPECT_THROW(DecodeDataset(longer), Error);
  EXPECT_THROW(DecodeDataset(bytes.substr(0, bytes.size() / 2)), Error);
}

TEST(GeneratorConfigTest, StrictJsonRoundTrip) {
  GeneratorConfig c;
  c.expert.standoff_rule = StandoffRule::kDisplayed;
  c.sampler.goal_std = 0.2;
  const GeneratorConfig back = GeneratorConfigFromJson(ToJson(c));
  EXPECT_EQ(ToJson(back), ToJson(c));
  EXPECT_THROW(GeneratorConfigFromJson(Json::parse(R"({"expert": {"kq": 1}})")),
               Error);
  EXPECT_THROW(
      GeneratorConfigFromJson(Json::parse(R"({"arm": {"link_lengths": [1]}})")),
      Error);
}

}  // namespace
}  // namespace codeil::demos
