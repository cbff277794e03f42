#ifndef CODEIL_TESTS_TEST_UTIL_H_
#define CODEIL_TESTS_TEST_UTIL_H_

#include <random>

#include "codeil/arm/trajectory.h"
#include "codeil/diffkit/mlp.h"

namespace codeil::testing {

inline diffkit::Vector RandomVector(int n, std::mt19937_64& rng,
                                    double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  diffkit::Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

inline diffkit::Matrix RandomMatrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  diffkit::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

inline arm::State RandomState(int dof, std::mt19937_64& rng) {
  return arm::State{RandomVector(dof, rng), RandomVector(dof, rng, 0.5)};
}

// Rollout of smooth random accelerations; consistent with the dynamics.
inline arm::Trajectory RandomDemo(const arm::ArmSpec& arm, int horizon,
                                  std::mt19937_64& rng, int id = 0,
                                  int extra_features = 0) {
  const int d = arm.dof();
  const diffkit::Vector amp = RandomVector(d, rng);
  const diffkit::Vector freq = RandomVector(d, rng, 3.0);
  std::vector<diffkit::Vector> actions;
  for (int t = 0; t < horizon; ++t) {
    actions.push_back((amp.array() * (freq.array() * (0.01 * t)).sin()).matrix());
  }
  arm::TaskMeta meta;
  const arm::State s0 = RandomState(d, rng);
  meta.start_ee = arm::ForwardKinematics(arm, s0.q);
  meta.goal_ee = arm::Pose2{1.0 + 0.2 * RandomVector(1, rng)(0),
                            0.5 + 0.2 * RandomVector(1, rng)(0), 0.3};
  meta.features = RandomVector(extra_features, rng);
  arm::Trajectory demo =
      arm::Rollout(arm::ReplayController(actions), s0, horizon, 0.01, meta);
  demo.id = id;
  demo.expert_generated = true;
  return demo;
}

}  // namespace codeil::testing

#endif  // CODEIL_TESTS_TEST_UTIL_H_
