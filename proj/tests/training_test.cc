#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "codeil/diffkit/verify.h"
#include "codeil/error.h"
#include "codeil/policies/nn_policy.h"
#include "codeil/policies/rmp.h"
#include "codeil/training/losses.h"
#include "codeil/training/train_config.h"
#include "codeil/training/trainer.h"
#include "test_util.h"

namespace codeil::training {
namespace {

using diffkit::Matrix;
using diffkit::Vector;
using policies::NnPolicy;

NnPolicy ZeroPolicy(int dof, int fdim) {
  const std::vector<int> widths{2 * dof + fdim, 4, dof};
  return NnPolicy(dof, fdim,
                  diffkit::MakeZeroMlp(widths, diffkit::Activation::kElu));
}

arm::Trajectory OneStep(double action) {
  arm::Trajectory demo;
  Vector a(1);
  a << action;
  demo.states = {arm::State{Vector::Zero(1), Vector::Zero(1)},
                 arm::Step(arm::State{Vector::Zero(1), Vector::Zero(1)}, a,
                           0.01)};
  demo.actions = {a};
  return demo;
}

// Actions produced by `teacher` on random states.
std::vector<arm::Trajectory> TeacherData(const NnPolicy& teacher, int count,
                                         int horizon, std::mt19937_64& rng) {
  std::vector<arm::Trajectory> demos;
  for (int i = 0; i < count; ++i) {
    arm::Trajectory demo = testing::RandomDemo(arm::ArmSpec::Default(), horizon,
                                               rng, i);
    demo.expert_generated = false;
    for (int t = 0; t < horizon; ++t) {
      demo.actions[t] =
          teacher.Act(demo.states[t], arm::PolicyFeatures(demo.meta));
    }
    demos.push_back(std::move(demo));
  }
  return demos;
}

TEST(BcLossTest, SingleStepUnitAction) {
  const std::vector<arm::Trajectory> demos{OneStep(1.0)};
  EXPECT_DOUBLE_EQ(BcLoss(ZeroPolicy(1, 2), demos), 0.5);
}

TEST(BcLossTest, QuadraticInResiduals) {
  std::mt19937_64 rng(1);
  std::vector<arm::Trajectory> demos{
      testing::RandomDemo(arm::ArmSpec::Default(), 7, rng),
      testing::RandomDemo(arm::ArmSpec::Default(), 4, rng)};
  const NnPolicy zero = ZeroPolicy(2, 2);
  const double base = BcLoss(zero, demos);
  for (auto& demo : demos) {
    for (auto& a : demo.actions) a *= 2.0;
  }
  EXPECT_NEAR(BcLoss(zero, demos), 4.0 * base, 1e-14 * base);
}

TEST(BcLossTest, TeacherHasZeroLossAndMissingActionsThrow) {
  std::mt19937_64 rng(2);
  const NnPolicy teacher = NnPolicy::Random(2, 2, rng, {6});
  std::vector<arm::Trajectory> demos = TeacherData(teacher, 2, 5, rng);
  EXPECT_EQ(BcLoss(teacher, demos), 0.0);
  demos[1].actions.clear();
  EXPECT_THROW(BcLoss(teacher, demos), Error);
}

TEST(InjectNoiseTest, CountsTargetsAndDeterminism) {
  std::mt19937_64 rng(3);
  std::vector<arm::Trajectory> demos;
  for (int i = 0; i < 5; ++i) {
    demos.push_back(testing::RandomDemo(arm::ArmSpec::Default(), 4, rng, i));
  }
  const auto all = InjectNoise(demos, 0.05, 1.0, 9);
  ASSERT_EQ(all.size(), 10u);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(all[i].states[2].q, demos[i].states[2].q);
    EXPECT_NE(all[5 + i].states[2].q, demos[i].states[2].q);
    EXPECT_EQ(all[5 + i].actions[1], demos[i].actions[1]);
  }
  EXPECT_EQ(InjectNoise(demos, 0.05, 0.2, 9).size(), 6u);
  const auto a = InjectNoise(demos, 0.05, 0.4, 9);
  const auto b = InjectNoise(demos, 0.05, 0.4, 9);
  ASSERT_EQ(a.size(), 7u);
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].states[3].Stacked(), b[i].states[3].Stacked());
  }
  const auto clean = InjectNoise(demos, 0.0, 1.0, 9);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(clean[5 + i].states[1].Stacked(), demos[i].states[1].Stacked());
  }
  EXPECT_THROW(InjectNoise(demos, 0.05, 0.0, 9), Error);
}

TEST(CodeLossTest, FrozenAuxWithZeroPolicyAndUnitAction) {
  const std::vector<arm::Trajectory> demos{OneStep(1.0)};
  const NnPolicy zero = ZeroPolicy(1, 2);
  const std::vector<SampleRef> refs{{0, 0}};
  for (double nu : {0.1, 1.0, 10.0}) {
    diffkit::Tape tape(zero.NumParameters());
    const BatchTerms t =
        RecordFrozenCodeBatch(tape, zero, 0, demos, refs, nu, 0.5);
    EXPECT_DOUBLE_EQ(t.total.value()(0, 0), nu * 0.5);
    EXPECT_EQ(t.state_term.value()(0, 0), 0.0);
  }
}

TEST(CodeLossTest, FrozenActionTermRecoversBcPerBatch) {
  std::mt19937_64 rng(4);
  std::vector<arm::Trajectory> demos{
      testing::RandomDemo(arm::ArmSpec::Default(), 9, rng),
      testing::RandomDemo(arm::ArmSpec::Default(), 6, rng)};
  const NnPolicy policy = NnPolicy::Random(2, 2, rng, {8});
  const std::vector<SampleRef> batch{{0, 1}, {0, 8}, {1, 0}, {1, 3}};
  diffkit::Tape a(policy.NumParameters()), b(policy.NumParameters());
  const double scale = 1.0 / 8.0;
  EXPECT_EQ(
      RecordFrozenCodeBatch(a, policy, 0, demos, batch, 1.0, scale)
          .action_term.value()(0, 0),
      RecordBcBatch(b, policy, 0, demos, batch, scale).total.value()(0, 0));
}

TEST(CodeLossTest, FullLossMatchesDirectSum) {
  std::mt19937_64 rng(5);
  const arm::ArmSpec arm = arm::ArmSpec::Default();
  std::vector<arm::Trajectory> demos{testing::RandomDemo(arm, 6, rng, 0),
                                     testing::RandomDemo(arm, 4, rng, 1)};
  const NnPolicy policy = NnPolicy::Random(2, 2, rng, {8});
  const auxtraj::AuxTrajectory aux =
      auxtraj::AuxTrajectory::Independent(arm, 2, 1e-3, rng, {4});
  const double nu = 0.7;
  double state = 0.0, action = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int t = 0; t <= demos[i].horizon(); ++t) {
      const auxtraj::AuxState s = aux.SampleState(demos[i], i, t);
      state += (s.q - demos[i].states[t].q).squaredNorm() +
               (s.qd - demos[i].states[t].qd).squaredNorm();
      if (t < demos[i].horizon()) {
        const Vector pi = policy.Act(arm::State{s.q, s.qd},
                                     arm::PolicyFeatures(demos[i].meta));
        action += (aux.SampleAction(demos[i], i, t) - pi).squaredNorm();
      }
    }
  }
  const LossValues v = CodeLoss(policy, aux, demos, nu);
  EXPECT_NEAR(v.state_term, state / 20.0, 1e-12 * (1 + state));
  EXPECT_NEAR(v.action_term, action / 20.0, 1e-7 * (1 + action));
  EXPECT_NEAR(v.total, v.state_term + nu * v.action_term, 1e-12 * v.total);
  EXPECT_GE(v.state_term, 0.0);
  EXPECT_THROW(CodeLoss(policy, aux, demos, 0.0), Error);
}

// Gradient of the collocation loss w.r.t. policy and aux parameters on a
// 1-demo, 5-step instance.
double CodeGradientError(const policies::Policy& policy_init,
                         auxtraj::AuxMode mode, std::mt19937_64& rng) {
  const arm::ArmSpec arm = arm::ArmSpec::Default();
  const std::vector<arm::Trajectory> demos{testing::RandomDemo(arm, 5, rng)};
  auto policy = policy_init.Clone();
  auxtraj::AuxTrajectory aux =
      mode == auxtraj::AuxMode::kJoint
          ? auxtraj::AuxTrajectory::Joint(arm, 0, 1e-3, rng, {6})
          : auxtraj::AuxTrajectory::Independent(arm, 1, 1e-3, rng, {6});
  const int np = policy->NumParameters();
  const std::vector<SampleRef> refs = ActionRefs(demos);
  diffkit::LossFn loss = [&](const Vector& flat, Vector* grad) {
    policy->SetFlatParameters(flat.head(np));
    diffkit::Unflatten(aux.MutableNetworks(), flat.tail(flat.size() - np));
    diffkit::Tape tape(static_cast<int>(flat.size()));
    const BatchTerms t =
        RecordCodeBatch(tape, *policy, 0, aux, np, demos, refs, 1.0, 0.1);
    if (grad) *grad = tape.Backward(t.total);
    return t.total.value()(0, 0);
  };
  Vector flat(np + aux.NumParameters());
  flat << policy->FlatParameters(), diffkit::Flatten(aux.Networks());
  return diffkit::FiniteDiffCheck(loss, flat, 1e-6);
}

TEST(CodeLossTest, GradientPassesFiniteDifferenceGate) {
  std::mt19937_64 rng(6);
  const NnPolicy nn = NnPolicy::Random(2, 2, rng, {6});
  const policies::RmpPolicy rmp =
      policies::RmpPolicy::Random(arm::ArmSpec::Default(), 2, rng, {6});
  for (auto mode : {auxtraj::AuxMode::kJoint, auxtraj::AuxMode::kIndependent}) {
    EXPECT_LT(CodeGradientError(nn, mode, rng), 1e-5);
    EXPECT_LT(CodeGradientError(rmp, mode, rng), 1e-5);
  }
}

TEST(TrainConfigTest, StrictJson) {
  const TrainConfig c = TrainConfigFromJson(
      Json::parse(R"({"method": "bc", "lr": 0.01, "noise": {"sigma": 0.1}})"));
  EXPECT_EQ(c.method, Method::kBc);
  EXPECT_EQ(c.lr, 0.01);
  EXPECT_EQ(c.noise.sigma, 0.1);
  EXPECT_EQ(c.noise.fraction, 0.2);
  EXPECT_EQ(c.ResolvedBatchSize(49), 500);
  EXPECT_EQ(c.ResolvedBatchSize(50), 2000);
  EXPECT_THROW(TrainConfigFromJson(Json::parse(R"({"lr0": 1})")), Error);
  EXPECT_THROW(TrainConfigFromJson(Json::parse(R"({"method": "dagger"})")),
               Error);
  EXPECT_THROW(TrainConfigFromJson(Json::parse(R"({"lr": "fast"})")), Error);
  EXPECT_THROW(TrainConfigFromJson(Json::parse(R"({"lr_min": 1.0})")), Error);
  const TrainConfig back = TrainConfigFromJson(ToJson(c));
  EXPECT_EQ(ToJson(back), ToJson(c));
  EXPECT_DOUBLE_EQ(NuFromLambda(1e4, 0.01), 1.0);
}

TEST(TrainTest, TeacherStudentDrivesBcLossToZero) {
  std::mt19937_64 rng(7);
  const NnPolicy teacher = NnPolicy::Random(2, 2, rng, {8});
  const std::vector<arm::Trajectory> demos = TeacherData(teacher, 2, 20, rng);
  const NnPolicy student = NnPolicy::Random(2, 2, rng, {8});
  TrainConfig config;
  config.method = Method::kBc;
  config.max_epochs = 20000;
  config.plateau_patience = 20;
  config.weight_decay = 0.0;
  const TrainResult r = Train(config, demos, student, nullptr);
  EXPECT_LT(BcLoss(*r.policy, demos), 1e-6);
}

TEST(TrainTest, LargeNuDrivesActionTermDown) {
  std::mt19937_64 rng(8);
  const arm::ArmSpec arm = arm::ArmSpec::Default();
  const std::vector<arm::Trajectory> demos{testing::RandomDemo(arm, 30, rng)};
  const NnPolicy policy = NnPolicy::Random(2, 2, rng, {16});
  const auxtraj::AuxTrajectory aux =
      auxtraj::AuxTrajectory::Independent(arm, 1, 1e-3, rng, {8});
  TrainConfig config;
  config.nu = 1e4;
  config.max_epochs = 3000;
  config.plateau_patience = 50;
  const TrainResult r = Train(config, demos, policy, &aux);
  const LossValues v = CodeLoss(*r.policy, *r.aux, demos, config.nu);
  EXPECT_LT(v.action_term, 1e-6);
  EXPECT_TRUE(std::isfinite(v.state_term));
}

TEST(TrainTest, DeterministicHistoryAndMonotoneLr) {
  std::mt19937_64 rng(9);
  const arm::ArmSpec arm = arm::ArmSpec::Default();
  const std::vector<arm::Trajectory> demos{testing::RandomDemo(arm, 12, rng, 0),
                                           testing::RandomDemo(arm, 9, rng, 1)};
  const NnPolicy policy = NnPolicy::Random(2, 2, rng, {8});
  const auxtraj::AuxTrajectory aux =
      auxtraj::AuxTrajectory::Joint(arm, 0, 1e-3, rng, {8});
  TrainConfig config;
  config.batch_size = 7;
  config.max_epochs = 120;
  config.plateau_patience = 3;
  config.lr_min = 4e-3;
  config.seed = 3;
  for (Method m : {Method::kBc, Method::kBcNoise, Method::kCode}) {
    config.method = m;
    const TrainResult a = Train(config, demos, policy, &aux);
    const TrainResult b = Train(config, demos, policy, &aux);
    EXPECT_EQ(a.history.Csv(), b.history.Csv());
    EXPECT_EQ(a.policy->FlatParameters(), b.policy->FlatParameters());
    double prev = config.lr;
    for (const EpochRecord& e : a.history.epochs) {
      EXPECT_LE(e.lr, prev);
      EXPECT_GE(e.lr, config.lr_min);
      prev = e.lr;
    }
    EXPECT_EQ(a.aux.has_value(), m == Method::kCode);
  }
}

TEST(TrainTest, NonFiniteLossAbortsWithEpoch) {
  const std::vector<arm::Trajectory> demos{OneStep(1e300)};
  TrainConfig config;
  config.method = Method::kBc;
  try {
    Train(config, demos, ZeroPolicy(1, 2), nullptr);
    FAIL();
  } catch (const TrainingDiverged& e) {
    EXPECT_EQ(e.epoch(), 0);
    EXPECT_EQ(e.kind(), ErrorKind::kNumeric);
    EXPECT_TRUE(e.last_finite().policy->FlatParameters().isZero(0.0));
  }
}

TEST(TrainTest, CodeWithoutAuxIsRejected) {
  const std::vector<arm::Trajectory> demos{OneStep(1.0)};
  EXPECT_THROW(Train(TrainConfig{}, demos, ZeroPolicy(1, 2), nullptr), Error);
}

}  // namespace
}  // namespace codeil::training
