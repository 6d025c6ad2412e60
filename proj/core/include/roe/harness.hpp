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
#include <deque>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "roe/a2c.hpp"
#include "roe/gridenv.hpp"
#include "roe/neural.hpp"
#include "roe/normalize.hpp"
#include "roe/rarity.hpp"
#include "roe/stats.hpp"

namespace roe {

enum class TrainMode { extrinsic_baseline, roe };

std::string_view to_string(TrainMode mode);
TrainMode train_mode_from_string(std::string_view name);

/// Everything a training run needs. JSON keys mirror the field names; unknown
/// keys are rejected. Defaults are the A2C / RMSprop / RoE hyperparameters
/// the method was published with.
struct RunConfig {
  std::string scenario = "deadly_corridor";
  std::string scenario_file;  // optional JSON definition overriding the built-in one
  std::optional<int> variant;
  TrainMode mode = TrainMode::roe;
  std::int64_t total_steps = 500'000;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "runs/default";

  // A2C
  double learning_rate = 7e-4;
  double gamma = 0.99;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  std::optional<int> workers;  // default 4, or 16 for deathmatch
  int t_max = 20;
  int batch_size = 64;
  int frame_skip = 4;
  double rmsprop_eps = 1e-5;
  double rmsprop_alpha = 0.99;

  // RoE
  int buffer_size = 100;
  double tau = 0.01;

  // Network body: "compact" (two 3x3 convolutions + dense) or "mlp" (dense only).
  std::string body = "compact";
  std::vector<int> hidden{128};

  // Harness
  std::optional<int> max_steps;  // episode cap in ticks; default from the scenario
  NormalizationMode normalization = NormalizationMode::affine01;
  int episode_window = 10;
  int checkpoint_every = 0;  // updates between step_k checkpoints; 0 disables
  int threads = 1;

  int effective_workers() const;
  A2CConfig a2c() const;
  RoEConfig roe() const;
  GridEnvConfig env_config() const;
  NetConfig net_config(const GridEnv& env) const;
  void validate() const;

  nlohmann::json to_json() const;
  /// Applies the keys present in `j` on top of `base`.
  static RunConfig from_json(const nlohmann::json& j, RunConfig base);
  static RunConfig from_json(const nlohmann::json& j);
};

/// Resolves a scenario name (and optional variant slot) to an environment config.
GridEnvConfig resolve_env_config(const std::string& scenario, const std::string& scenario_file,
                                 std::optional<int> variant);

/// True when `current` strictly beats `best_so_far`; ties keep the earlier checkpoint.
inline bool checkpoint_if_improved(double current, double best_so_far) { return current > best_so_far; }

struct DiagnosticsRow {
  std::int64_t step = 0;
  std::optional<double> mean_extrinsic_episode_reward;
  double mean_intrinsic_reward = 0.0;
  UpdateDiagnostics update;
};

struct TrainSummary {
  std::int64_t steps = 0;
  std::int64_t updates = 0;
  std::int64_t episodes = 0;
  double best_mean_extrinsic = -std::numeric_limits<double>::infinity();
  std::filesystem::path run_dir;
};

/// Synchronous A2C training loop with event buffer, logs and checkpoints.
///
/// Run directory layout:
///   config.json
///   checkpoints/{best,final,step_<k>}.ckpt
///   logs/diagnostics.csv, logs/events.csv, logs/episodes.csv
class Trainer {
 public:
  explicit Trainer(RunConfig config);
  /// Restores the full training state (parameters, optimizer, buffer, workers, RNGs).
  static Trainer resume(const std::filesystem::path& checkpoint, std::optional<std::int64_t> total_steps = {},
                        std::optional<std::filesystem::path> output_dir = {});

  Trainer(Trainer&&) noexcept;
  Trainer& operator=(Trainer&&) noexcept;
  ~Trainer();

  /// One collect + update cycle. Returns false once total_steps is reached.
  bool step();
  TrainSummary run();

  const RunConfig& config() const;
  const PolicyValueNet& net() const;
  const EventBuffer& buffer() const;
  std::int64_t steps_done() const;
  const std::vector<DiagnosticsRow>& history() const;

  void save_checkpoint(const std::filesystem::path& path) const;

 private:
  struct Impl;
  explicit Trainer(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

TrainSummary train(const RunConfig& config);

// ---------------------------------------------------------------------------

struct EvalReport {
  std::string scenario;
  std::optional<int> variant;
  std::uint64_t seed = 0;
  std::vector<double> scores;  // raw extrinsic episode totals
  std::vector<int> ticks;
  std::vector<std::uint8_t> goal;
  std::vector<std::uint8_t> died;
  double mean = 0.0;
  double std = 0.0;
  double goal_rate = 0.0;
  double mean_ticks = 0.0;
  EventTaxonomy taxonomy;
  std::vector<double> event_means;  // per-event mean occurrences per episode
  int width = 0;
  int height = 0;
  std::vector<double> visitation;  // row-major proportions of decisions spent per cell

  std::size_t episodes() const { return scores.size(); }
  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

/// Stochastic-policy evaluation. Episode e uses seeds derived from (seed, e),
/// so results do not depend on how episodes are batched.
EvalReport evaluate(const PolicyValueNet& net, const GridEnvConfig& env_config, int episodes, std::uint64_t seed);

/// Loads a checkpoint read-only and evaluates it on the given scenario/variant.
EvalReport evaluate_checkpoint(const std::filesystem::path& checkpoint, const GridEnvConfig& env_config, int episodes,
                               std::uint64_t seed);

PolicyValueNet load_policy(const std::filesystem::path& checkpoint);

/// Writes heatmap.csv (proportions) and heatmap.pgm (values clipped at `clip`, scaled to 0..255).
void heatmap_export(const EvalReport& report, double clip, const std::filesystem::path& directory);

struct AdaptationRow {
  std::string variant;
  double roe_mean = 0.0;
  double roe_std = 0.0;
  double baseline_mean = 0.0;
  double baseline_std = 0.0;
  TTestResult test;
};

struct AdaptationTable {
  std::vector<AdaptationRow> rows;
  std::vector<EvalReport> roe_reports;
  std::vector<EvalReport> baseline_reports;
  nlohmann::json to_json() const;
  std::string to_text() const;
};

/// Evaluates two deathmatch-trained checkpoints on every single-weapon variant.
AdaptationTable adaptation_study(const std::filesystem::path& roe_checkpoint,
                                 const std::filesystem::path& baseline_checkpoint, const GridEnvConfig& base_env,
                                 int episodes, std::uint64_t seed);

/// Shortest round-trip decimal text for a double.
std::string format_double(double value);

}  // namespace roe
