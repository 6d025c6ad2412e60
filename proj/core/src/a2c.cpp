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
#include "roe/a2c.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "roe/errors.hpp"
#include "roe/rarity.hpp"

namespace roe {

namespace {

// Runs fn(i) for i in [0, n); with threads > 1 the range is split across jthreads.
template <typename Fn>
void fork_join(int n, int threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  const int lanes = std::min(threads, n);
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(lanes));
  for (int lane = 0; lane < lanes; ++lane) {
    pool.emplace_back([&, lane] {
      for (int i = lane; i < n; i += lanes) fn(i);
    });
  }
}

}  // namespace

std::string_view to_string(NormalizationMode mode) {
  return mode == NormalizationMode::affine01 ? "affine01" : "symmetric";
}

NormalizationMode normalization_mode_from_string(std::string_view name) {
  if (name == "affine01") return NormalizationMode::affine01;
  if (name == "symmetric") return NormalizationMode::symmetric;
  throw ConfigError("unknown normalization '" + std::string(name) + "' (expected affine01 or symmetric)");
}

double normalize_extrinsic(double raw, NormalizationMode mode) {
  if (!(raw >= -100.0 && raw <= 100.0)) {
    throw ContractError("normalize_extrinsic: raw reward " + std::to_string(raw) + " outside [-100, 100]");
  }
  return mode == NormalizationMode::affine01 ? (raw + 100.0) / 200.0 : raw / 100.0;
}

double learner_extrinsic_reward(double raw, const ScenarioDef& scenario, NormalizationMode mode) {
  // Several kills inside one repeated action can exceed the declared range; saturate.
  return normalize_extrinsic(std::clamp(raw * scenario.reward_scale, -100.0, 100.0), mode);
}

void A2CConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("a2c: gamma must lie in (0, 1]");
  if (t_max < 1) throw ConfigError("a2c: t_max must be >= 1");
  if (workers < 1) throw ConfigError("a2c: workers must be >= 1");
  if (batch_size < 1) throw ConfigError("a2c: batch_size must be >= 1");
  coefs.validate();
  rmsprop.validate();
}

// ---------------------------------------------------------------------------

std::vector<double> compute_returns(std::span<const double> rewards, std::span<const std::uint8_t> dones,
                                    double bootstrap_value, double gamma) {
  if (rewards.size() != dones.size()) throw ContractError("compute_returns: rewards/dones length mismatch");
  std::vector<double> out(rewards.size());
  double running = bootstrap_value;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    if (dones[i]) running = 0.0;
    running = rewards[i] + gamma * running;
    out[i] = running;
  }
  return out;
}

std::vector<double> compute_returns(const Trajectory& trajectory, double gamma) {
  std::vector<double> rewards;
  std::vector<std::uint8_t> dones;
  rewards.reserve(trajectory.steps.size());
  dones.reserve(trajectory.steps.size());
  for (const auto& s : trajectory.steps) {
    rewards.push_back(s.reward);
    dones.push_back(s.done ? 1 : 0);
  }
  const bool ends_terminal = !trajectory.steps.empty() && trajectory.steps.back().done;
  return compute_returns(rewards, dones, ends_terminal ? 0.0 : trajectory.bootstrap_value, gamma);
}

std::vector<double> compute_advantages(std::span<const double> returns, std::span<const double> values) {
  if (returns.size() != values.size()) throw ContractError("compute_advantages: length mismatch");
  std::vector<double> out(returns.size());
  for (std::size_t i = 0; i < returns.size(); ++i) out[i] = returns[i] - values[i];
  return out;
}

// ---------------------------------------------------------------------------

RolloutCollector::RolloutCollector(const GridEnvConfig& env_config, int workers, std::uint64_t master_seed,
                                   int threads)
    : threads_(threads) {
  if (workers < 1) throw ConfigError("rollout: need at least one worker");
  workers_.reserve(static_cast<std::size_t>(workers));
  for (int i = 0; i < workers; ++i) {
    const std::uint64_t seed = derive_seed(master_seed, static_cast<std::uint64_t>(i));
    GridEnvConfig cfg = env_config;
    cfg.seed = seed;
    Worker w{GridEnv(cfg), Rng(derive_seed(seed, 0xac7105)), seed, 0, EventVector(), 0};
    start_episode(w);
    workers_.push_back(std::move(w));
  }
}

void RolloutCollector::start_episode(Worker& w) {
  w.env.reset(derive_seed(w.seed, w.episode_index));
  w.episode_events = EventVector(w.env.taxonomy().size());
  w.episode_decisions = 0;
}

SegmentResult RolloutCollector::collect(const PolicyValueNet& net, const RewardSettings& rewards, int t_max) {
  if (t_max < 1) throw ContractError("collect: t_max must be >= 1");
  const int n = workers();
  const auto obs_size = static_cast<Eigen::Index>(workers_.front().env.observation_shape().size());
  const ScenarioDef& scenario = workers_.front().env.scenario();

  SegmentResult result;
  result.trajectories.resize(static_cast<std::size_t>(n));
  for (auto& t : result.trajectories) {
    t.observations.resize(obs_size, t_max);
    t.steps.resize(static_cast<std::size_t>(t_max));
  }

  Eigen::MatrixXd batch(obs_size, n);
  std::vector<StepResult> steps(static_cast<std::size_t>(n));
  std::vector<int> actions(static_cast<std::size_t>(n));
  double intrinsic_total = 0.0;
  double learner_total = 0.0;

  for (int t = 0; t < t_max; ++t) {
    for (int i = 0; i < n; ++i) {
      workers_[static_cast<std::size_t>(i)].env.observe_into({batch.col(i).data(), static_cast<std::size_t>(obs_size)});
    }
    const ForwardResult fwd = net.forward(batch);
    for (int i = 0; i < n; ++i) {
      auto& w = workers_[static_cast<std::size_t>(i)];
      actions[static_cast<std::size_t>(i)] =
          sample_action({fwd.probs.col(i).data(), static_cast<std::size_t>(fwd.probs.rows())}, w.action_rng);
    }
    fork_join(n, threads_, [&](int i) {
      steps[static_cast<std::size_t>(i)] =
          workers_[static_cast<std::size_t>(i)].env.step(actions[static_cast<std::size_t>(i)]);
    });

    for (int i = 0; i < n; ++i) {
      auto& w = workers_[static_cast<std::size_t>(i)];
      auto& traj = result.trajectories[static_cast<std::size_t>(i)];
      StepResult& sr = steps[static_cast<std::size_t>(i)];
      traj.observations.col(t) = batch.col(i);

      Transition& tr = traj.steps[static_cast<std::size_t>(t)];
      tr.action = actions[static_cast<std::size_t>(i)];
      tr.value = fwd.values[i];
      tr.done = sr.done;
      tr.extrinsic = sr.extrinsic_reward;
      tr.position = sr.position;
      if (rewards.roe_snapshot) {
        tr.intrinsic = rarity_reward(sr.events, *rewards.roe_snapshot, rewards.tau);
        tr.reward = tr.intrinsic;
        tr.source = RewardSource::rarity;
      } else {
        if (rewards.log_snapshot) tr.intrinsic = rarity_reward(sr.events, *rewards.log_snapshot, rewards.tau);
        tr.reward = learner_extrinsic_reward(sr.extrinsic_reward, scenario, rewards.normalization);
        tr.source = RewardSource::extrinsic;
      }
      intrinsic_total += tr.intrinsic;
      learner_total += tr.reward;

      w.episode_events += sr.events;
      ++w.episode_decisions;
      tr.events = std::move(sr.events);
      if (sr.done) {
        const EnvState& s = w.env.state();
        result.finished.push_back({i, w.episode_events, s.episode_extrinsic, s.tick, w.episode_decisions,
                                   s.goal_reached, s.dead});
        ++w.episode_index;
        start_episode(w);
      }
    }
  }

  for (int i = 0; i < n; ++i) {
    workers_[static_cast<std::size_t>(i)].env.observe_into({batch.col(i).data(), static_cast<std::size_t>(obs_size)});
  }
  const ForwardResult last = net.forward(batch);
  for (int i = 0; i < n; ++i) {
    auto& traj = result.trajectories[static_cast<std::size_t>(i)];
    traj.bootstrap_value = traj.steps.back().done ? 0.0 : last.values[i];
  }

  result.transitions = static_cast<std::size_t>(n) * static_cast<std::size_t>(t_max);
  result.mean_intrinsic = intrinsic_total / static_cast<double>(result.transitions);
  result.mean_learner_reward = learner_total / static_cast<double>(result.transitions);
  return result;
}

nlohmann::json RolloutCollector::state_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& w : workers_) {
    out.push_back({{"env", w.env.state().to_json()},
                   {"action_rng", rng_to_string(w.action_rng)},
                   {"seed", w.seed},
                   {"episode_index", w.episode_index},
                   {"episode_events", w.episode_events.to_json()},
                   {"episode_decisions", w.episode_decisions}});
  }
  return out;
}

void RolloutCollector::restore(const nlohmann::json& state) {
  if (!state.is_array() || state.size() != workers_.size()) {
    throw ConfigError("rollout: checkpoint worker count does not match the configuration");
  }
  for (std::size_t i = 0; i < workers_.size(); ++i) {
    const auto& j = state[i];
    auto& w = workers_[i];
    w.env.restore(EnvState::from_json(j.at("env")));
    w.action_rng = rng_from_string(j.at("action_rng").get<std::string>());
    w.seed = j.at("seed").get<std::uint64_t>();
    w.episode_index = j.at("episode_index").get<std::uint64_t>();
    w.episode_events = EventVector::from_json(j.at("episode_events"));
    w.episode_decisions = j.at("episode_decisions").get<int>();
  }
}

// ---------------------------------------------------------------------------

UpdateDiagnostics update(PolicyValueNet& net, const std::vector<Trajectory>& trajectories, const A2CConfig& config,
                         Rng& rng) {
  std::size_t total = 0;
  for (const auto& t : trajectories) total += t.steps.size();
  if (total == 0) throw ContractError("update: empty segment");
  const Eigen::Index obs_size = trajectories.front().observations.rows();

  Eigen::MatrixXd observations(obs_size, static_cast<Eigen::Index>(total));
  std::vector<int> actions;
  std::vector<double> returns;
  actions.reserve(total);
  returns.reserve(total);
  Eigen::Index col = 0;
  for (const auto& t : trajectories) {
    const auto r = compute_returns(t, config.gamma);
    for (std::size_t i = 0; i < t.steps.size(); ++i, ++col) {
      observations.col(col) = t.observations.col(static_cast<Eigen::Index>(i));
      actions.push_back(t.steps[i].action);
      returns.push_back(r[i]);
    }
  }

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = total - 1; i > 0; --i) {
    std::swap(order[i], order[static_cast<std::size_t>(uniform_index(rng, i + 1))]);
  }

  UpdateDiagnostics diag;
  diag.transitions = total;
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  for (std::size_t start = 0; start < total; start += batch_size) {
    const std::size_t m = std::min(batch_size, total - start);
    Eigen::MatrixXd mb_obs(obs_size, static_cast<Eigen::Index>(m));
    std::vector<int> mb_actions(m);
    std::vector<double> mb_returns(m);
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t src = order[start + k];
      mb_obs.col(static_cast<Eigen::Index>(k)) = observations.col(static_cast<Eigen::Index>(src));
      mb_actions[k] = actions[src];
      mb_returns[k] = returns[src];
    }
    LossResult lr = net.loss_and_gradients({mb_obs, mb_actions, mb_returns}, config.coefs);
    const double norm = clip_grad_norm(lr.gradient, config.coefs.max_grad_norm);
    rmsprop_step(net, lr.gradient, config.coefs.learning_rate, config.rmsprop.alpha, config.rmsprop.eps);

    const double w = static_cast<double>(m) / static_cast<double>(total);
    diag.loss += w * lr.diagnostics.loss;
    diag.policy_loss += w * lr.diagnostics.policy_loss;
    diag.value_loss += w * lr.diagnostics.value_loss;
    diag.entropy += w * lr.diagnostics.entropy;
    diag.grad_norm += norm;
    ++diag.minibatches;
  }
  diag.grad_norm /= diag.minibatches;
  return diag;
}

}  // namespace roe
