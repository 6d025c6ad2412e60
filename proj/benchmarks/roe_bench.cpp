// Copyright 2026 The RoE Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Microbenchmarks for the hot paths of a training step: environment
// stepping, the rarity reward, the event buffer, and the network.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include <Eigen/Core>

#include "roe/a2c.hpp"
#include "roe/events.hpp"
#include "roe/gridenv.hpp"
#include "roe/neural.hpp"
#include "roe/rarity.hpp"

namespace {

using namespace roe;

GridEnvConfig builtin_config(ScenarioKind kind) { return GridEnvConfig::from_scenario(builtin_scenario(kind), 1); }

EventVector random_events(std::mt19937_64& rng, std::size_t size) {
  std::poisson_distribution<int> count(2.0);
  EventVector v(size);
  for (std::size_t i = 0; i < size; ++i) v.add(i, static_cast<EventVector::Count>(count(rng)));
  return v;
}

void BM_EnvStep(benchmark::State& state) {
  GridEnv env(builtin_config(static_cast<ScenarioKind>(state.range(0))));
  env.reset();
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> action(0, env.action_count() - 1);
  for (auto _ : state) {
    StepResult r = env.step(action(rng));
    if (r.done) env.reset();
    benchmark::DoNotOptimize(r.extrinsic_reward);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_EnvStep)
    ->Arg(static_cast<int>(ScenarioKind::health_gathering))
    ->Arg(static_cast<int>(ScenarioKind::deadly_corridor))
    ->Arg(static_cast<int>(ScenarioKind::deathmatch));

void BM_RarityReward(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const std::size_t n = taxonomy_doom26().size();
  const EventVector x = random_events(rng, n);
  std::vector<double> mean(n);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (double& m : mean) m = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(rarity_reward(x, mean, 0.01));
}
BENCHMARK(BM_RarityReward);

void BM_EventBufferPush(benchmark::State& state) {
  std::mt19937_64 rng(2);
  EventBuffer buffer(taxonomy_doom26(), static_cast<std::size_t>(state.range(0)));
  std::vector<EventVector> episodes;
  for (int i = 0; i < 256; ++i) episodes.push_back(random_events(rng, taxonomy_doom26().size()));
  std::size_t i = 0;
  for (auto _ : state) {
    buffer.push_episode(episodes[i++ & 255]);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_EventBufferPush)->Arg(1)->Arg(100);

NetConfig bench_net_config(bool mlp) {
  GridEnv env(builtin_config(ScenarioKind::deadly_corridor));
  return mlp ? NetConfig::mlp(env.observation_shape(), env.action_count())
             : NetConfig::compact(env.observation_shape(), env.action_count());
}

Eigen::MatrixXd random_observations(const NetConfig& config, int batch) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd obs(config.input.size(), batch);
  for (Eigen::Index i = 0; i < obs.size(); ++i) obs.data()[i] = u(rng);
  return obs;
}

void BM_Forward(benchmark::State& state) {
  const NetConfig config = bench_net_config(state.range(0) != 0);
  const PolicyValueNet net(config, 5);
  const Eigen::MatrixXd obs = random_observations(config, static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(obs));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_Forward)->ArgNames({"mlp", "batch"})->Args({0, 4})->Args({1, 4})->Args({0, 64})->Args({1, 64});

void BM_LossAndGradients(benchmark::State& state) {
  const NetConfig config = bench_net_config(state.range(0) != 0);
  const PolicyValueNet net(config, 5);
  constexpr int kBatch = 64;
  const Eigen::MatrixXd obs = random_observations(config, kBatch);
  std::vector<int> actions(kBatch);
  std::vector<double> returns(kBatch);
  for (int i = 0; i < kBatch; ++i) {
    actions[i] = i % config.action_count;
    returns[i] = 0.01 * i;
  }
  const Batch batch{obs, actions, returns};
  for (auto _ : state) benchmark::DoNotOptimize(net.loss_and_gradients(batch, LossCoefficients{}));
  state.SetItemsProcessed(state.iterations() * kBatch);
}
BENCHMARK(BM_LossAndGradients)->ArgName("mlp")->Arg(0)->Arg(1);

void BM_ComputeReturns(benchmark::State& state) {
  std::vector<double> rewards(20, 0.5);
  std::vector<std::uint8_t> dones(20, 0);
  dones[11] = 1;
  for (auto _ : state) benchmark::DoNotOptimize(compute_returns(rewards, dones, 1.0, 0.99));
}
BENCHMARK(BM_ComputeReturns);

}  // namespace

BENCHMARK_MAIN();
