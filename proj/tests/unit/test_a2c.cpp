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
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "roe/a2c.hpp"
#include "roe/errors.hpp"
#include "roe/normalize.hpp"
#include "roe/rarity.hpp"
#include "roe/rng.hpp"

namespace roe {
namespace {

// Returns ------------------------------------------------------------------

std::vector<double> returns_of(const std::vector<double>& rewards, const std::vector<std::uint8_t>& dones,
                               double bootstrap, double gamma) {
  return compute_returns(rewards, dones, bootstrap, gamma);
}

TEST(Returns, SingleTerminalStep) {
  EXPECT_EQ(returns_of({1.0}, {1}, 123.0, 0.99), std::vector<double>{1.0});
}

TEST(Returns, HandRecursion) {
  const auto r = returns_of({0, 0, 1}, {0, 0, 1}, 5.0, 0.5);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_DOUBLE_EQ(r[0], 0.25);
  EXPECT_DOUBLE_EQ(r[1], 0.5);
  EXPECT_DOUBLE_EQ(r[2], 1.0);
}

TEST(Returns, BootstrapSeedsTheLastStep) {
  const auto r = returns_of({1, 2}, {0, 0}, 10.0, 0.5);
  EXPECT_DOUBLE_EQ(r[1], 2.0 + 0.5 * 10.0);
  EXPECT_DOUBLE_EQ(r[0], 1.0 + 0.5 * r[1]);
}

TEST(Returns, MatchBruteForceSummation) {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const auto n = 1 + uniform_index(rng, 10);
    const double gamma = uniform01(rng);
    const double bootstrap = standard_normal(rng);
    std::vector<double> rewards(n);
    std::vector<std::uint8_t> dones(n);
    for (std::size_t i = 0; i < n; ++i) {
      rewards[i] = standard_normal(rng);
      dones[i] = bernoulli(rng, 0.2) ? 1 : 0;
    }
    const auto got = returns_of(rewards, dones, bootstrap, gamma);
    for (std::size_t t = 0; t < n; ++t) {
      // R_t = sum_k gamma^k r_{t+k} up to and including the first terminal,
      // plus gamma^(n-t) * bootstrap when no terminal intervenes.
      double expected = 0.0;
      double discount = 1.0;
      bool cut = false;
      for (std::size_t k = t; k < n; ++k) {
        expected += discount * rewards[k];
        discount *= gamma;
        if (dones[k]) {
          cut = true;
          break;
        }
      }
      if (!cut) expected += discount * bootstrap;
      ASSERT_NEAR(got[t], expected, 1e-12) << "trial " << trial << " t " << t;
    }
  }
}

TEST(Returns, GammaZeroGivesImmediateRewards) {
  const std::vector<double> rewards{0.3, -1.0, 2.0, 4.0};
  EXPECT_EQ(returns_of(rewards, {0, 1, 0, 0}, 99.0, 0.0), rewards);
}

TEST(Returns, TerminalCutsDependenceOnLaterRewards) {
  std::vector<double> rewards{1, 2, 3, 4, 5, 6};
  const std::vector<std::uint8_t> dones{0, 0, 1, 0, 0, 0};
  const auto before = returns_of(rewards, dones, 7.0, 0.9);
  rewards[3] = 1000.0;
  rewards[5] = -1000.0;
  const auto after = returns_of(rewards, dones, -7.0, 0.9);
  for (std::size_t t = 0; t < 3; ++t) EXPECT_EQ(before[t], after[t]);
}

TEST(Returns, TrajectoryOverloadUsesDoneFlags) {
  Trajectory tr;
  tr.steps.resize(2);
  tr.steps[0].reward = 1.0;
  tr.steps[0].done = true;
  tr.steps[1].reward = 2.0;
  tr.bootstrap_value = 4.0;
  const auto r = compute_returns(tr, 0.5);
  EXPECT_DOUBLE_EQ(r[0], 1.0);
  EXPECT_DOUBLE_EQ(r[1], 4.0);
}

// Advantages ---------------------------------------------------------------

TEST(Advantages, Basics) {
  const std::vector<double> v{1.0, -2.0, 3.5};
  EXPECT_EQ(compute_advantages(v, v), (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(compute_advantages(std::vector<double>{2.0}, std::vector<double>{0.5}), std::vector<double>{1.5});
  EXPECT_THROW((void)compute_advantages(std::vector<double>{1.0}, v), ContractError);
}

TEST(Advantages, ExactValueFunctionHasZeroMeanAdvantage) {
  // Two-state chain with a fixed policy: P = [[0.7, 0.3], [0.4, 0.6]], r = [1, -2],
  // gamma = 0.9, so V = (I - gamma P)^-1 r is known exactly.
  Eigen::Matrix2d p;
  p << 0.7, 0.3, 0.4, 0.6;
  const Eigen::Vector2d r(1.0, -2.0);
  const double gamma = 0.9;
  const Eigen::Vector2d v = (Eigen::Matrix2d::Identity() - gamma * p).inverse() * r;

  Rng rng(17);
  int state = 0;
  double sum = 0.0;
  std::size_t count = 0;
  for (int segment = 0; segment < 2000; ++segment) {
    std::vector<double> rewards;
    std::vector<double> values;
    std::vector<std::uint8_t> dones;
    for (int t = 0; t < 20; ++t) {
      values.push_back(v[state]);
      rewards.push_back(r[state]);
      dones.push_back(0);
      state = uniform01(rng) < p(state, 0) ? 0 : 1;
    }
    const auto returns = compute_returns(rewards, dones, v[state], gamma);
    for (double a : compute_advantages(returns, values)) {
      sum += a;
      ++count;
    }
  }
  EXPECT_LT(std::abs(sum / static_cast<double>(count)), 0.05);
}

// Rollouts -----------------------------------------------------------------

/// Corridor with the goal armor one cell ahead of the spawn.
GridEnvConfig goal_next_door() {
  const nlohmann::json j = {{"kind", "my_way_home"},
                            {"layout", {"######", "#SG..#", "######"}},
                            {"legend", {{"G", {{"item", "goal_armor"}}}}},
                            {"spawn", {{"random_facing", false}, {"facing", "east"}}},
                            {"can_attack", false},
                            {"events", {"movement", "pickup_armor"}},
                            {"rewards", {{"living", -0.0001}, {"goal", 100}}},
                            {"max_steps", 40}};
  return GridEnvConfig::from_scenario(scenario_from_json(j));
}

PolicyValueNet net_for(const GridEnvConfig& cfg, std::uint64_t seed) {
  GridEnv env(cfg);
  return PolicyValueNet(NetConfig::mlp(env.observation_shape(), env.action_count(), {16}), seed);
}

TEST(Rollout, SegmentHoldsWorkersTimesTmaxTransitions) {
  const GridEnvConfig cfg = GridEnvConfig::from_scenario(builtin_scenario(ScenarioKind::health_gathering));
  RolloutCollector collector(cfg, 4, 1);
  const PolicyValueNet net = net_for(cfg, 2);
  for (int segment = 0; segment < 3; ++segment) {
    const SegmentResult seg = collector.collect(net, {}, 20);
    EXPECT_EQ(seg.transitions, 80u);
    ASSERT_EQ(seg.trajectories.size(), 4u);
    for (const Trajectory& tr : seg.trajectories) {
      EXPECT_EQ(tr.steps.size(), 20u);
      EXPECT_EQ(tr.observations.cols(), 20);
    }
  }
}

TEST(Rollout, BaselineGoalStepSeesNormalizedHundred) {
  const GridEnvConfig cfg = goal_next_door();
  RolloutCollector collector(cfg, 2, 5);
  const PolicyValueNet net = net_for(cfg, 6);
  int goals = 0;
  for (int segment = 0; segment < 10; ++segment) {
    for (const Trajectory& tr : collector.collect(net, {}, 20).trajectories) {
      for (const Transition& t : tr.steps) {
        EXPECT_EQ(t.source, RewardSource::extrinsic);
        EXPECT_EQ(t.reward, normalize_extrinsic(t.extrinsic));
        if (t.extrinsic == 100.0) {
          ++goals;
          EXPECT_EQ(t.reward, 1.0);
          EXPECT_TRUE(t.done);
        }
      }
    }
  }
  EXPECT_GT(goals, 0);
}

TEST(Rollout, RoEModeUsesOnlyRarityRewards) {
  const GridEnvConfig cfg = GridEnvConfig::from_scenario(builtin_scenario(ScenarioKind::deadly_corridor));
  RolloutCollector collector(cfg, 4, 7);
  const PolicyValueNet net = net_for(cfg, 8);
  std::vector<double> snapshot(collector.taxonomy().size(), 0.0);
  snapshot[0] = 40.0;
  RewardSettings settings;
  settings.roe_snapshot = snapshot;
  int zero_steps = 0;
  int event_steps = 0;
  for (int segment = 0; segment < 5; ++segment) {
    const SegmentResult seg = collector.collect(net, settings, 20);
    double intrinsic = 0.0;
    for (const Trajectory& tr : seg.trajectories) {
      for (const Transition& t : tr.steps) {
        EXPECT_EQ(t.source, RewardSource::rarity);
        EXPECT_EQ(t.reward, rarity_reward(t.events, snapshot, 0.01));
        EXPECT_EQ(t.reward, t.intrinsic);
        intrinsic += t.intrinsic;
        if (t.events.is_zero()) {
          EXPECT_EQ(t.reward, 0.0);
          ++zero_steps;
        } else {
          ++event_steps;
        }
      }
    }
    EXPECT_NEAR(seg.mean_intrinsic, intrinsic / 80.0, 1e-12);
  }
  EXPECT_GT(zero_steps, 0);
  EXPECT_GT(event_steps, 0);
}

TEST(Rollout, FinishedEpisodesCarryTheirEventTotals) {
  const GridEnvConfig cfg = goal_next_door();
  RolloutCollector collector(cfg, 3, 9);
  const PolicyValueNet net = net_for(cfg, 10);
  std::vector<EventVector> running(3, EventVector(collector.taxonomy().size()));
  int finished = 0;
  for (int segment = 0; segment < 5; ++segment) {
    const SegmentResult seg = collector.collect(net, {}, 20);
    std::vector<FinishedEpisode> expected;
    for (int t = 0; t < 20; ++t) {
      for (int w = 0; w < 3; ++w) {
        const Transition& tr = seg.trajectories[static_cast<std::size_t>(w)].steps[static_cast<std::size_t>(t)];
        running[static_cast<std::size_t>(w)] += tr.events;
        if (tr.done) {
          FinishedEpisode e;
          e.worker = w;
          e.events = running[static_cast<std::size_t>(w)];
          expected.push_back(e);
          running[static_cast<std::size_t>(w)] = EventVector(collector.taxonomy().size());
        }
      }
    }
    ASSERT_EQ(seg.finished.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      EXPECT_EQ(seg.finished[i].worker, expected[i].worker);
      EXPECT_EQ(seg.finished[i].events, expected[i].events);
      EXPECT_EQ(seg.finished[i].goal, seg.finished[i].events[1] == 1);
    }
    finished += static_cast<int>(expected.size());
  }
  EXPECT_GT(finished, 0);
}

TEST(Rollout, ThreadCountDoesNotChangeResults) {
  const GridEnvConfig cfg = GridEnvConfig::from_scenario(builtin_scenario(ScenarioKind::deathmatch));
  RolloutCollector serial(cfg, 4, 11, 1);
  RolloutCollector threaded(cfg, 4, 11, 3);
  const PolicyValueNet net = net_for(cfg, 12);
  for (int segment = 0; segment < 3; ++segment) {
    const SegmentResult a = serial.collect(net, {}, 20);
    const SegmentResult b = threaded.collect(net, {}, 20);
    for (std::size_t w = 0; w < 4; ++w) {
      EXPECT_EQ(a.trajectories[w].observations, b.trajectories[w].observations);
      for (std::size_t t = 0; t < 20; ++t) EXPECT_EQ(a.trajectories[w].steps[t].action, b.trajectories[w].steps[t].action);
    }
  }
}

TEST(Rollout, StateJsonRestoresWorkers) {
  const GridEnvConfig cfg = GridEnvConfig::from_scenario(builtin_scenario(ScenarioKind::my_way_home));
  const PolicyValueNet net = net_for(cfg, 14);
  RolloutCollector a(cfg, 2, 13);
  a.collect(net, {}, 20);
  RolloutCollector b(cfg, 2, 99);
  b.restore(a.state_json());
  const SegmentResult ra = a.collect(net, {}, 20);
  const SegmentResult rb = b.collect(net, {}, 20);
  for (std::size_t w = 0; w < 2; ++w) {
    EXPECT_EQ(ra.trajectories[w].observations, rb.trajectories[w].observations);
    EXPECT_EQ(ra.trajectories[w].bootstrap_value, rb.trajectories[w].bootstrap_value);
  }
}

TEST(LearnerReward, SaturatesAndNormalizes) {
  ScenarioDef def = builtin_scenario(ScenarioKind::deathmatch);
  EXPECT_EQ(learner_extrinsic_reward(0.0, def, NormalizationMode::affine01), 0.5);
  EXPECT_EQ(learner_extrinsic_reward(1e6, def, NormalizationMode::affine01), 1.0);
  EXPECT_EQ(learner_extrinsic_reward(-1e6, def, NormalizationMode::symmetric), -1.0);
}

// Update -------------------------------------------------------------------

struct Fixture {
  GridEnvConfig cfg = GridEnvConfig::from_scenario(builtin_scenario(ScenarioKind::deadly_corridor));
  std::vector<Trajectory> segment;
  PolicyValueNet net;

  Fixture() {
    GridEnv env(cfg);
    net = PolicyValueNet(NetConfig::compact(env.observation_shape(), env.action_count()), 21);
    RolloutCollector collector(cfg, 4, 22);
    segment = collector.collect(net, {}, 20).trajectories;
  }
};

TEST(Update, IdenticalInputsGiveIdenticalParameters) {
  Fixture f;
  PolicyValueNet a = f.net;
  PolicyValueNet b = f.net;
  Rng ra(5);
  Rng rb(5);
  const UpdateDiagnostics da = update(a, f.segment, A2CConfig{}, ra);
  const UpdateDiagnostics db = update(b, f.segment, A2CConfig{}, rb);
  EXPECT_EQ(a.parameters(), b.parameters());
  EXPECT_EQ(a.rmsprop_state(), b.rmsprop_state());
  EXPECT_EQ(da.loss, db.loss);
  EXPECT_NE(a.parameters(), f.net.parameters());
}

TEST(Update, EightyTransitionsSplitIntoSixtyFourAndSixteen) {
  Fixture f;
  Rng rng(1);
  const UpdateDiagnostics d = update(f.net, f.segment, A2CConfig{}, rng);
  EXPECT_EQ(d.transitions, 80u);
  EXPECT_EQ(d.minibatches, 2);
  EXPECT_GT(d.grad_norm, 0.0);
}

TEST(Update, InitialEntropyIsNearLogActionCount) {
  Fixture f;
  Rng rng(1);
  const UpdateDiagnostics d = update(f.net, f.segment, A2CConfig{}, rng);
  // The small policy-head gain keeps the untrained policy close to uniform.
  EXPECT_LE(d.entropy, std::log(16.0));
  EXPECT_GT(d.entropy, 0.9 * std::log(16.0));
}

TEST(Update, SmallStepDecreasesLossOnAFrozenBatch) {
  Fixture f;
  A2CConfig config;
  config.batch_size = 80;  // one minibatch holding the whole segment
  config.coefs.learning_rate = 1e-5;

  Eigen::MatrixXd obs(f.net.config().input.size(), 80);
  std::vector<int> actions;
  std::vector<double> returns;
  Eigen::Index col = 0;
  for (const Trajectory& tr : f.segment) {
    obs.middleCols(col, tr.observations.cols()) = tr.observations;
    col += tr.observations.cols();
    for (const Transition& t : tr.steps) actions.push_back(t.action);
    for (double r : compute_returns(tr, config.gamma)) returns.push_back(r);
  }
  const double before = f.net.loss_and_gradients({obs, actions, returns}, config.coefs).diagnostics.loss;
  Rng rng(3);
  update(f.net, f.segment, config, rng);
  const double after = f.net.loss_and_gradients({obs, actions, returns}, config.coefs).diagnostics.loss;
  EXPECT_LT(after, before);
}

TEST(A2CConfig, Validation) {
  A2CConfig c;
  EXPECT_NO_THROW(c.validate());
  c.gamma = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.t_max = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.coefs.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

}  // namespace
}  // namespace roe
