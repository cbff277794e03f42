#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "codeil/arm/trajectory.h"
#include "codeil/auxtraj/aux_trajectory.h"
#include "codeil/demos/dataset.h"
#include "codeil/policies/nn_policy.h"
#include "codeil/policies/rmp.h"
#include "codeil/training/losses.h"

namespace {

using namespace codeil;

const demos::Dataset& Data() {
  static const demos::Dataset data =
      demos::GenerateDataset(8, demos::GeneratorConfig{}, 3, nullptr);
  return data;
}

std::vector<auxtraj::SampleRef> Batch(int size) {
  std::vector<auxtraj::SampleRef> refs = training::ActionRefs(Data().trajectories);
  refs.resize(std::min<size_t>(refs.size(), size));
  return refs;
}

void BM_BcBatchGradient(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const int width = static_cast<int>(state.range(0));
  const auto policy = policies::NnPolicy::Random(2, 2, rng, {width, width});
  const auto refs = Batch(500);
  for (auto _ : state) {
    diffkit::Tape tape(policy.NumParameters());
    const auto terms = training::RecordBcBatch(tape, policy, 0, Data().trajectories,
                                               refs, 1.0 / 1000);
    benchmark::DoNotOptimize(tape.Backward(terms.total));
  }
  state.SetItemsProcessed(state.iterations() * refs.size());
}
BENCHMARK(BM_BcBatchGradient)->Arg(32)->Arg(64)->Arg(256);

void BM_CodeBatchGradient(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto policy = policies::NnPolicy::Random(2, 2, rng, {64, 64});
  const auto aux = state.range(0) == 0
                       ? auxtraj::AuxTrajectory::Joint(Data().arm, 0, 1e-3, rng,
                                                       {64, 64})
                       : auxtraj::AuxTrajectory::Independent(
                             Data().arm, 8, 1e-3, rng, {16, 8});
  const auto refs = Batch(500);
  const int np = policy.NumParameters();
  for (auto _ : state) {
    diffkit::Tape tape(np + aux.NumParameters());
    const auto terms = training::RecordCodeBatch(
        tape, policy, 0, aux, np, Data().trajectories, refs, 1.0, 1.0 / 1000);
    benchmark::DoNotOptimize(tape.Backward(terms.total));
  }
  state.SetItemsProcessed(state.iterations() * refs.size());
}
BENCHMARK(BM_CodeBatchGradient)->Arg(0)->Arg(1);

void BM_RmpAct(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto policy = policies::RmpPolicy::Random(Data().arm, 2, rng, {32, 32});
  const arm::Trajectory& demo = Data().trajectories.front();
  const auto features = arm::PolicyFeatures(demo.meta);
  for (auto _ : state) {
    benchmark::DoNotOptimize(policy.Act(demo.states[10], features));
  }
}
BENCHMARK(BM_RmpAct);

void BM_PolicyRollout(benchmark::State& state) {
  std::mt19937_64 rng(4);
  const auto policy = policies::NnPolicy::Random(2, 2, rng, {64, 64});
  const arm::Trajectory& demo = Data().trajectories.front();
  for (auto _ : state) {
    benchmark::DoNotOptimize(arm::Rollout(policy.AsController(), demo.states[0],
                                          demo.horizon(), demo.ts, demo.meta));
  }
}
BENCHMARK(BM_PolicyRollout);

}  // namespace

BENCHMARK_MAIN();
