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
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "roe/events.hpp"
#include "roe/gridenv.hpp"
#include "roe/neural.hpp"
#include "roe/normalize.hpp"
#include "roe/rng.hpp"

namespace roe {

struct A2CConfig {
  double gamma = 0.99;
  int t_max = 20;
  int workers = 4;
  int batch_size = 64;
  LossCoefficients coefs;
  RmsPropConfig rmsprop;

  void validate() const;
};

/// Where a learner reward came from. RoE runs must only ever produce `rarity`.
enum class RewardSource : std::uint8_t { extrinsic, rarity };

struct Transition {
  int action = 0;
  double reward = 0.0;     // what the learner sees
  double extrinsic = 0.0;  // raw environment reward, kept for logging
  double intrinsic = 0.0;  // rarity reward against the segment snapshot
  RewardSource source = RewardSource::extrinsic;
  double value = 0.0;
  bool done = false;
  EventVector events;
  Cell position;
};

/// One worker's slice of a rollout segment. Column i of `observations` is the
/// state in which steps[i].action was taken.
struct Trajectory {
  Eigen::MatrixXd observations;
  std::vector<Transition> steps;
  double bootstrap_value = 0.0;  // V of the state after the last step; 0 when it was terminal
};

/// R_t = r_t + gamma R_{t+1}, seeded with the bootstrap value and cut at terminal steps.
std::vector<double> compute_returns(std::span<const double> rewards, std::span<const std::uint8_t> dones,
                                    double bootstrap_value, double gamma);
std::vector<double> compute_returns(const Trajectory& trajectory, double gamma);

/// A = R - V elementwise.
std::vector<double> compute_advantages(std::span<const double> returns, std::span<const double> values);

struct FinishedEpisode {
  int worker = 0;
  EventVector events;
  double extrinsic = 0.0;
  int ticks = 0;
  int decisions = 0;
  bool goal = false;
  bool died = false;
};

struct SegmentResult {
  std::vector<Trajectory> trajectories;
  std::vector<FinishedEpisode> finished;  // in (step, worker) order
  double mean_intrinsic = 0.0;            // per transition, against the snapshot
  double mean_learner_reward = 0.0;
  std::size_t transitions = 0;
};

/// Learner-reward settings shared by every step of a segment.
struct RewardSettings {
  /// Frozen temporal-mean snapshot. Present => learner sees rarity rewards only.
  std::optional<std::vector<double>> roe_snapshot;
  /// Snapshot used only for logging the intrinsic reward in extrinsic runs.
  std::optional<std::vector<double>> log_snapshot;
  double tau = 0.01;
  NormalizationMode normalization = NormalizationMode::affine01;
};

/// A fixed set of environments stepped in lockstep against one network.
class RolloutCollector {
 public:
  RolloutCollector(const GridEnvConfig& env_config, int workers, std::uint64_t master_seed, int threads = 1);

  /// Advances every worker exactly t_max steps, restarting finished episodes.
  SegmentResult collect(const PolicyValueNet& net, const RewardSettings& rewards, int t_max);

  int workers() const { return static_cast<int>(workers_.size()); }
  const EventTaxonomy& taxonomy() const { return workers_.front().env.taxonomy(); }
  const GridEnv& env(int worker) const { return workers_.at(static_cast<std::size_t>(worker)).env; }

  nlohmann::json state_json() const;
  void restore(const nlohmann::json& state);

 private:
  struct Worker {
    GridEnv env;
    Rng action_rng;
    std::uint64_t seed = 0;
    std::uint64_t episode_index = 0;
    EventVector episode_events;
    int episode_decisions = 0;
  };

  void start_episode(Worker& w);

  std::vector<Worker> workers_;
  int threads_;
};

/// Extrinsic reward as the learner sees it in baseline runs: scaled into the
/// declared [-100, 100] range (saturating), then normalized.
double learner_extrinsic_reward(double raw, const ScenarioDef& scenario, NormalizationMode mode);

struct UpdateDiagnostics {
  double loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double grad_norm = 0.0;  // pre-clip, averaged over minibatches
  std::size_t transitions = 0;
  int minibatches = 0;
};

/// Shuffles the segment deterministically, splits it into minibatches of at
/// most batch_size and applies clipped RMSprop steps.
UpdateDiagnostics update(PolicyValueNet& net, const std::vector<Trajectory>& trajectories, const A2CConfig& config,
                         Rng& rng);

}  // namespace roe
