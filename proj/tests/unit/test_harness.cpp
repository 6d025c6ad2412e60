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
#include <filesystem>
#include <limits>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "roe/checkpoint.hpp"
#include "roe/errors.hpp"
#include "roe/harness.hpp"
#include "roe/normalize.hpp"
#include "roe/stats.hpp"
#include "test_util.hpp"

namespace roe {
namespace {

namespace fs = std::filesystem;

RunConfig small_run(const fs::path& dir, std::int64_t steps = 1600) {
  RunConfig c;
  c.scenario = "health_gathering";
  c.body = "mlp";
  c.hidden = {32};
  c.total_steps = steps;
  c.seed = 3;
  c.output_dir = dir;
  return c;
}

std::size_t csv_rows(const fs::path& path) {
  std::istringstream in(testing::slurp(path));
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) rows += !line.empty();
  return rows == 0 ? 0 : rows - 1;  // minus the header
}

// Normalization -------------------------------------------------------------

TEST(Normalize, AffineAndSymmetricExamples) {
  EXPECT_EQ(normalize_extrinsic(-100.0), 0.0);
  EXPECT_EQ(normalize_extrinsic(0.0), 0.5);
  EXPECT_EQ(normalize_extrinsic(100.0), 1.0);
  EXPECT_EQ(normalize_extrinsic(-100.0, NormalizationMode::symmetric), -1.0);
  EXPECT_EQ(normalize_extrinsic(50.0, NormalizationMode::symmetric), 0.5);
  EXPECT_THROW((void)normalize_extrinsic(100.5), ContractError);
  EXPECT_THROW((void)normalize_extrinsic(std::nan("")), ContractError);
  EXPECT_EQ(normalization_mode_from_string("symmetric"), NormalizationMode::symmetric);
  EXPECT_THROW((void)normalization_mode_from_string("tanh"), ConfigError);
}

// Statistics ----------------------------------------------------------------

/// n values with exactly the given mean and sample standard deviation.
std::vector<double> with_moments(double m, double s, int n) {
  std::vector<double> z(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = std::sin(1.0 + 7.0 * i);
  const double zm = mean(z);
  const double zs = sample_std(z);
  for (double& v : z) v = m + s * (v - zm) / zs;
  return z;
}

TEST(WelchTest, ReproducesPublishedPValuesFromSummaryStatistics) {
  // Deathmatch: 4611 +- 2595 vs 4062 +- 2442 over 100 episodes each, p = 0.1250.
  const TTestResult dm = welch_t_test(with_moments(4611, 2595, 100), with_moments(4062, 2442, 100));
  EXPECT_NEAR(dm.p_two_sided, 0.1250, 5e-4);
  // Shotgun variant: 1375 +- 941 vs 1832 +- 1752, p = 0.0226.
  const TTestResult sg = welch_t_test(with_moments(1375, 941, 100), with_moments(1832, 1752, 100));
  EXPECT_NEAR(sg.p_two_sided, 0.0226, 5e-4);
  EXPECT_LT(sg.t, 0.0);
}

TEST(WelchTest, SmallSampleReferenceValues) {
  const std::vector<double> a{1.0, 2.5, 3.1, 4.8, 2.2};
  const std::vector<double> b{3.3, 4.1, 5.9, 6.2, 4.4, 5.0, 7.1};
  const TTestResult r = welch_t_test(a, b);
  EXPECT_NEAR(r.t, -3.030378985737716, 1e-10);
  EXPECT_NEAR(r.df, 8.497063247875738, 1e-10);
  EXPECT_NEAR(r.p_two_sided, 0.015200815369179029, 1e-9);
}

TEST(WelchTest, NullFalsePositiveRateIsNominal) {
  Rng rng(2718);
  constexpr int kTrials = 4000;
  int rejections = 0;
  for (int trial = 0; trial < kTrials; ++trial) {
    std::vector<double> a(30);
    std::vector<double> b(30);
    for (double& v : a) v = standard_normal(rng);
    for (double& v : b) v = 3.0 * standard_normal(rng);
    rejections += welch_t_test(a, b).p_two_sided < 0.05;
  }
  const double rate = static_cast<double>(rejections) / kTrials;
  const double sigma = std::sqrt(0.05 * 0.95 / kTrials);
  EXPECT_LT(std::abs(rate - 0.05), 4.0 * sigma + 0.005);
}

TEST(Stats, MeanAndSampleStd) {
  const std::vector<double> xs{2, 4, 4, 4, 5, 5, 7, 9};
  EXPECT_DOUBLE_EQ(mean(xs), 5.0);
  EXPECT_NEAR(sample_std(xs), std::sqrt(32.0 / 7.0), 1e-14);
  EXPECT_EQ(sample_std(std::vector<double>{1.0}), 0.0);
}

// Configuration -------------------------------------------------------------

TEST(RunConfig, DefaultsMatchTheTrainingTable) {
  const RunConfig c;
  EXPECT_EQ(c.gamma, 0.99);
  EXPECT_EQ(c.t_max, 20);
  EXPECT_EQ(c.batch_size, 64);
  EXPECT_EQ(c.learning_rate, 7e-4);
  EXPECT_EQ(c.entropy_coef, 0.01);
  EXPECT_EQ(c.value_coef, 0.5);
  EXPECT_EQ(c.max_grad_norm, 0.5);
  EXPECT_EQ(c.rmsprop_alpha, 0.99);
  EXPECT_EQ(c.rmsprop_eps, 1e-5);
  EXPECT_EQ(c.frame_skip, 4);
  EXPECT_EQ(c.buffer_size, 100);
  EXPECT_EQ(c.tau, 0.01);
  EXPECT_EQ(c.effective_workers(), 4);
  RunConfig dm;
  dm.scenario = "deathmatch";
  EXPECT_EQ(dm.effective_workers(), 16);
  dm.workers = 2;
  EXPECT_EQ(dm.effective_workers(), 2);
}

TEST(RunConfig, JsonRoundTripAndUnknownKeys) {
  RunConfig c = small_run("somewhere");
  c.variant = 5;
  c.scenario = "deathmatch";
  c.mode = TrainMode::extrinsic_baseline;
  c.max_steps = 300;
  const RunConfig back = RunConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());

  nlohmann::json j = c.to_json();
  j["learning_rat"] = 1.0;
  EXPECT_THROW((void)RunConfig::from_json(j), ConfigError);

  const RunConfig partial = RunConfig::from_json({{"seed", 9}}, c);
  EXPECT_EQ(partial.seed, 9u);
  EXPECT_EQ(partial.variant, 5);
}

TEST(RunConfig, Validation) {
  RunConfig c = small_run("x");
  EXPECT_NO_THROW(c.validate());
  c.total_steps = 10;  // less than one segment
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_run("x");
  c.tau = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_run("x");
  c.body = "transformer";
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_run("x");
  c.scenario = "e1m1";
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_run("x");
  c.variant = 1;  // variants only exist for deathmatch
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(RunConfig, FrameSkipAndEpisodeCapReachTheEnvironment) {
  RunConfig c = small_run("x");
  c.frame_skip = 2;
  c.max_steps = 77;
  const GridEnvConfig env = c.env_config();
  EXPECT_EQ(env.action_repeat, 2);
  EXPECT_EQ(env.max_steps, 77);
}

TEST(Checkpointing, OnlyStrictImprovementsAreSaved) {
  EXPECT_TRUE(checkpoint_if_improved(1.0, -std::numeric_limits<double>::infinity()));
  EXPECT_TRUE(checkpoint_if_improved(2.0, 1.0));
  EXPECT_FALSE(checkpoint_if_improved(1.0, 1.0));
  EXPECT_FALSE(checkpoint_if_improved(0.5, 1.0));
}

// Training ------------------------------------------------------------------

TEST(Trainer, SixteenHundredStepsAreTwentyUpdates) {
  const fs::path dir = testing::scratch_dir();
  Trainer trainer(small_run(dir));
  const TrainSummary s = trainer.run();
  EXPECT_EQ(s.steps, 1600);
  EXPECT_EQ(s.updates, 20);
  EXPECT_EQ(trainer.history().size(), 20u);
  EXPECT_EQ(trainer.history().back().step, 1600);
  EXPECT_EQ(csv_rows(dir / "logs" / "diagnostics.csv"), 20u);
  EXPECT_EQ(csv_rows(dir / "logs" / "events.csv"), 20u);
  EXPECT_TRUE(fs::exists(dir / "config.json"));
  EXPECT_TRUE(fs::exists(dir / "checkpoints" / "final.ckpt"));
  EXPECT_EQ(RunConfig::from_json(nlohmann::json::parse(testing::slurp(dir / "config.json"))).to_json(),
            trainer.config().to_json());
}

TEST(Trainer, BestCheckpointTracksTheBestEpisodeWindow) {
  const fs::path dir = testing::scratch_dir();
  RunConfig c = small_run(dir, 4000);
  c.max_steps = 60;  // short episodes so the window fills quickly
  Trainer trainer(c);
  const TrainSummary s = trainer.run();
  ASSERT_TRUE(std::isfinite(s.best_mean_extrinsic));
  double best = -std::numeric_limits<double>::infinity();
  for (const DiagnosticsRow& row : trainer.history()) {
    if (row.mean_extrinsic_episode_reward) best = std::max(best, *row.mean_extrinsic_episode_reward);
  }
  EXPECT_EQ(s.best_mean_extrinsic, best);
  const Checkpoint ck = read_checkpoint(dir / "checkpoints" / "best.ckpt");
  EXPECT_EQ(ck.meta.at("recorded_mean_extrinsic").get<double>(), best);
}

TEST(Trainer, RoEModeFillsTheEventBuffer) {
  const fs::path dir = testing::scratch_dir();
  RunConfig c = small_run(dir, 2400);
  c.max_steps = 60;
  Trainer trainer(c);
  trainer.run();
  EXPECT_GT(trainer.buffer().size(), 0u);
  EXPECT_LE(trainer.buffer().size(), 100u);
  // Every non-empty buffer has seen movement in this scenario.
  EXPECT_GT(trainer.buffer().temporal_mean()[0], 0.0);
}

TEST(Trainer, SameSeedSameDiagnostics) {
  Trainer a(small_run(testing::scratch_dir("_a"), 800));
  Trainer b(small_run(testing::scratch_dir("_b"), 800));
  a.run();
  b.run();
  ASSERT_EQ(a.history().size(), b.history().size());
  for (std::size_t i = 0; i < a.history().size(); ++i) {
    EXPECT_EQ(a.history()[i].update.loss, b.history()[i].update.loss);
    EXPECT_EQ(a.history()[i].mean_intrinsic_reward, b.history()[i].mean_intrinsic_reward);
  }
  EXPECT_EQ(a.net().parameters(), b.net().parameters());
}

TEST(Trainer, ResumeContinuesBitIdentically) {
  const fs::path full_dir = testing::scratch_dir("_full");
  RunConfig c = small_run(full_dir, 1600);
  c.checkpoint_every = 10;
  c.max_steps = 60;
  Trainer full(c);
  full.run();
  const fs::path mid = full_dir / "checkpoints" / "step_800.ckpt";
  ASSERT_TRUE(fs::exists(mid));

  const fs::path resumed_dir = testing::scratch_dir("_resumed");
  Trainer resumed = Trainer::resume(mid, std::nullopt, resumed_dir);
  EXPECT_EQ(resumed.steps_done(), 800);
  resumed.run();
  EXPECT_EQ(resumed.steps_done(), 1600);
  EXPECT_EQ(resumed.net().parameters(), full.net().parameters());
  EXPECT_EQ(resumed.net().rmsprop_state(), full.net().rmsprop_state());
  EXPECT_EQ(resumed.buffer().temporal_mean(), full.buffer().temporal_mean());
  ASSERT_EQ(resumed.history().size(), 10u);
  EXPECT_EQ(resumed.history().back().update.loss, full.history().back().update.loss);
}

TEST(Trainer, ResumeInPlaceTruncatesLaterLogRows) {
  const fs::path dir = testing::scratch_dir();
  RunConfig c = small_run(dir, 1600);
  c.checkpoint_every = 5;
  Trainer(c).run();
  Trainer resumed = Trainer::resume(dir / "checkpoints" / "step_400.ckpt");
  EXPECT_EQ(csv_rows(dir / "logs" / "diagnostics.csv"), 5u);
  resumed.run();
  EXPECT_EQ(csv_rows(dir / "logs" / "diagnostics.csv"), 20u);
}

// Evaluation ----------------------------------------------------------------

GridEnvConfig boxed_in() {
  const nlohmann::json j = {{"kind", "health_gathering"},
                            {"layout", {"#####", "#####", "##S##", "#####"}},
                            {"spawn", {{"random_facing", true}}},
                            {"can_attack", false},
                            {"events", {"movement", "pickup_medkit"}},
                            {"rewards", {{"living", 1}, {"death", -100}}},
                            {"max_steps", 40}};
  return GridEnvConfig::from_scenario(scenario_from_json(j));
}

PolicyValueNet net_for(const GridEnvConfig& cfg, std::uint64_t seed) {
  GridEnv env(cfg);
  return PolicyValueNet(NetConfig::mlp(env.observation_shape(), env.action_count(), {8}), seed);
}

TEST(Evaluate, AgentThatCannotMoveHasOneHotVisitation) {
  const GridEnvConfig cfg = boxed_in();
  const EvalReport r = evaluate(net_for(cfg, 1), cfg, 7, 5);
  ASSERT_EQ(r.episodes(), 7u);
  EXPECT_EQ(r.width, 5);
  EXPECT_EQ(r.height, 4);
  ASSERT_EQ(r.visitation.size(), 20u);
  for (std::size_t i = 0; i < r.visitation.size(); ++i) EXPECT_EQ(r.visitation[i], i == 2 * 5 + 2 ? 1.0 : 0.0);
  for (double s : r.scores) EXPECT_EQ(s, 40.0);
  EXPECT_EQ(r.mean, 40.0);
  EXPECT_EQ(r.std, 0.0);
  EXPECT_EQ(r.mean_ticks, 40.0);
  EXPECT_EQ(r.goal_rate, 0.0);
}

TEST(Evaluate, EpisodesDoNotDependOnBatching) {
  const GridEnvConfig cfg = GridEnvConfig::from_scenario(builtin_scenario(ScenarioKind::health_gathering));
  const PolicyValueNet net = net_for(cfg, 2);
  const EvalReport few = evaluate(net, cfg, 5, 77);
  const EvalReport many = evaluate(net, cfg, 20, 77);
  for (std::size_t e = 0; e < 5; ++e) {
    EXPECT_EQ(few.scores[e], many.scores[e]);
    EXPECT_EQ(few.ticks[e], many.ticks[e]);
  }
  double total = 0.0;
  for (double v : many.visitation) total += v;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Evaluate, ReportJsonRoundTrip) {
  const GridEnvConfig cfg = GridEnvConfig::from_scenario(builtin_scenario(ScenarioKind::my_way_home));
  const EvalReport r = evaluate(net_for(cfg, 3), cfg, 4, 1);
  const EvalReport back = EvalReport::from_json(r.to_json());
  EXPECT_EQ(back.scores, r.scores);
  EXPECT_EQ(back.visitation, r.visitation);
  EXPECT_EQ(back.taxonomy, r.taxonomy);
  EXPECT_EQ(back.event_means, r.event_means);
  EXPECT_EQ(back.to_json(), r.to_json());
}

TEST(Evaluate, MismatchedPolicyIsAConfigError) {
  const GridEnvConfig mwh = GridEnvConfig::from_scenario(builtin_scenario(ScenarioKind::my_way_home));
  const GridEnvConfig corridor = GridEnvConfig::from_scenario(builtin_scenario(ScenarioKind::deadly_corridor));
  EXPECT_THROW((void)evaluate(net_for(mwh, 1), corridor, 2, 1), ConfigError);
}

TEST(Evaluate, CheckpointEvaluationMatchesInMemoryNet) {
  const fs::path dir = testing::scratch_dir();
  Trainer trainer(small_run(dir, 800));
  trainer.run();
  const GridEnvConfig cfg = trainer.config().env_config();
  const EvalReport a = evaluate(trainer.net(), cfg, 6, 4);
  const EvalReport b = evaluate_checkpoint(dir / "checkpoints" / "final.ckpt", cfg, 6, 4);
  EXPECT_EQ(a.scores, b.scores);
}

TEST(Heatmap, ClipsAndScalesToGreyLevels) {
  EvalReport r;
  r.width = 3;
  r.height = 2;
  r.visitation = {0.5, 0.0125, 0.025, 0.0, 0.4625, 0.0};
  const fs::path dir = testing::scratch_dir();
  heatmap_export(r, 0.025, dir);
  const std::string pgm = testing::slurp(dir / "heatmap.pgm");
  std::istringstream in(pgm);
  std::string magic;
  int w = 0;
  int h = 0;
  int maxval = 0;
  in >> magic >> w >> h >> maxval;
  EXPECT_EQ(magic, "P2");
  EXPECT_EQ(w, 3);
  EXPECT_EQ(h, 2);
  EXPECT_EQ(maxval, 255);
  std::vector<int> levels(6);
  for (int& v : levels) in >> v;
  EXPECT_EQ(levels, (std::vector<int>{255, 128, 255, 0, 255, 0}));

  std::istringstream csv(testing::slurp(dir / "heatmap.csv"));
  std::vector<std::string> lines;
  for (std::string line; std::getline(csv, line);) lines.push_back(line);
  EXPECT_EQ(lines.size(), 2u);
  EXPECT_THROW(heatmap_export(r, 0.0, dir), ContractError);
}

TEST(Adaptation, TableCoversEveryVariant) {
  const fs::path dir = testing::scratch_dir();
  RunConfig c;
  c.scenario = "deathmatch";
  c.body = "mlp";
  c.hidden = {16};
  c.workers = 2;
  c.total_steps = 40;
  c.output_dir = dir / "roe";
  Trainer(c).run();
  c.mode = TrainMode::extrinsic_baseline;
  c.output_dir = dir / "base";
  Trainer(c).run();
  const AdaptationTable t = adaptation_study(dir / "roe" / "checkpoints" / "final.ckpt",
                                             dir / "base" / "checkpoints" / "final.ckpt",
                                             resolve_env_config("deathmatch", "", std::nullopt), 3, 1);
  ASSERT_EQ(t.rows.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(t.rows[i].variant, deathmatch_variants()[i].name);
    EXPECT_EQ(t.roe_reports[i].episodes(), 3u);
    EXPECT_EQ(t.rows[i].roe_mean, t.roe_reports[i].mean);
    EXPECT_EQ(t.rows[i].baseline_mean, t.baseline_reports[i].mean);
  }
  EXPECT_NE(t.to_text().find("chainsaw"), std::string::npos);
  EXPECT_EQ(t.to_json().size(), 5u);
}

}  // namespace
}  // namespace roe
