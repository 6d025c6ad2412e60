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
// roe: command-line front end for training, evaluation and analysis runs.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "roe/checkpoint.hpp"
#include "roe/errors.hpp"
#include "roe/harness.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw roe::ConfigError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw roe::ConfigError(path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

fs::path output_root() {
  const char* env = std::getenv("ROE_OUTPUT_ROOT");
  return env && *env ? fs::path(env) : fs::path("runs");
}

/// "best" / "final" name a checkpoint inside a run directory; anything else is a path.
/// A run too short to record a best checkpoint falls back to final.
fs::path resolve_checkpoint(const std::string& spec, const fs::path& run_dir) {
  if (spec == "best") {
    const fs::path best = run_dir / "checkpoints" / "best.ckpt";
    return fs::exists(best) ? best : run_dir / "checkpoints" / "final.ckpt";
  }
  if (spec == "final") return run_dir / "checkpoints" / "final.ckpt";
  return spec;
}

struct TrainArgs {
  std::string config;
  std::optional<std::string> scenario;
  std::optional<std::string> scenario_file;
  std::optional<std::string> variant;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> steps;
  std::optional<std::string> output;
  std::optional<std::string> body;
  std::optional<int> threads;
  std::optional<int> checkpoint_every;
  std::string resume;
  bool quiet = false;
};

struct EvalArgs {
  std::string checkpoint = "best";
  std::string run = ".";
  std::optional<std::string> scenario;
  std::optional<std::string> variant;
  int episodes = 100;
  std::uint64_t seed = 12345;
  std::string output;
  bool json = false;
};

struct HeatmapArgs {
  std::string report;
  std::string run = ".";
  double clip = 0.025;
  std::string output;
};

struct TraceArgs {
  std::string run;
  std::vector<std::string> events;
  std::string checkpoint;
};

struct AdaptArgs {
  std::string roe;
  std::string baseline;
  std::optional<std::string> scenario_file;
  int episodes = 100;
  std::uint64_t seed = 12345;
  std::string output;
  bool json = false;
};

roe::RunConfig resolve_train_config(const TrainArgs& a) {
  roe::RunConfig cfg;
  if (!a.config.empty()) cfg = roe::RunConfig::from_json(read_json_file(a.config), cfg);
  nlohmann::json overrides = nlohmann::json::object();
  if (a.scenario) overrides["scenario"] = *a.scenario;
  if (a.scenario_file) overrides["scenario_file"] = *a.scenario_file;
  if (a.variant) overrides["variant"] = *a.variant;
  if (a.mode) overrides["mode"] = *a.mode;
  if (a.seed) overrides["seed"] = *a.seed;
  if (a.steps) overrides["total_steps"] = *a.steps;
  if (a.body) overrides["body"] = *a.body;
  if (a.threads) overrides["threads"] = *a.threads;
  if (a.checkpoint_every) overrides["checkpoint_every"] = *a.checkpoint_every;
  cfg = roe::RunConfig::from_json(overrides, cfg);
  if (a.output) {
    cfg.output_dir = *a.output;
  } else if (a.config.empty() || !read_json_file(a.config).contains("output_dir")) {
    cfg.output_dir = output_root() / (cfg.scenario + (cfg.variant ? "_" + std::string(roe::variant_name(*cfg.variant)) : "") +
                                      "_" + std::string(roe::to_string(cfg.mode)) + "_seed" + std::to_string(cfg.seed));
  }
  cfg.validate();
  return cfg;
}

int run_train(const TrainArgs& a) {
  std::optional<roe::Trainer> trainer;
  if (!a.resume.empty()) {
    std::optional<fs::path> out;
    if (a.output) out = fs::path(*a.output);
    trainer.emplace(roe::Trainer::resume(a.resume, a.steps, out));
  } else {
    trainer.emplace(resolve_train_config(a));
  }
  std::cout << "effective configuration:\n" << trainer->config().to_json().dump(2) << std::endl;
  const auto total = trainer->config().total_steps;
  std::int64_t next_report = 0;
  while (trainer->step()) {
    if (!a.quiet && trainer->steps_done() >= next_report) {
      const auto& row = trainer->history().back();
      std::cout << "step " << row.step << "/" << total << "  mean_extrinsic "
                << (row.mean_extrinsic_episode_reward ? roe::format_double(*row.mean_extrinsic_episode_reward) : "n/a")
                << "  entropy " << row.update.entropy << std::endl;
      next_report = trainer->steps_done() + std::max<std::int64_t>(total / 20, 1);
    }
  }
  const roe::TrainSummary s = trainer->run();
  std::cout << "finished: " << s.steps << " steps, " << s.updates << " updates, " << s.episodes
            << " episodes; run directory " << s.run_dir.string() << std::endl;
  return kExitOk;
}

int run_eval(const EvalArgs& a) {
  const fs::path ckpt = resolve_checkpoint(a.checkpoint, a.run);
  const roe::Checkpoint meta = roe::read_checkpoint(ckpt);
  const nlohmann::json& trained = meta.meta.at("run_config");
  roe::RunConfig cfg = roe::RunConfig::from_json(trained);
  if (a.scenario) {
    cfg.scenario = *a.scenario;
    cfg.scenario_file.clear();
  }
  cfg.variant.reset();
  if (a.variant) cfg.variant = roe::variant_slot_from_string(*a.variant);
  const roe::GridEnvConfig env = cfg.env_config();
  nlohmann::json effective{{"checkpoint", ckpt.string()},
                           {"scenario", cfg.scenario},
                           {"variant", a.variant ? nlohmann::json(*a.variant) : nlohmann::json(nullptr)},
                           {"episodes", a.episodes},
                           {"seed", a.seed}};
  if (!a.json) std::cout << "effective configuration:\n" << effective.dump(2) << std::endl;

  const roe::EvalReport report = roe::evaluate_checkpoint(ckpt, env, a.episodes, a.seed);
  const fs::path out = a.output.empty() ? fs::path(a.run) / "eval" / "report.json" : fs::path(a.output);
  write_json_file(out, report.to_json());
  nlohmann::json summary{{"report", out.string()},          {"episodes", report.episodes()},
                         {"mean", report.mean},             {"std", report.std},
                         {"goal_rate", report.goal_rate},   {"mean_ticks", report.mean_ticks}};
  if (a.json) {
    std::cout << summary.dump() << std::endl;
  } else {
    std::cout << "score " << report.mean << " +- " << report.std << " over " << report.episodes()
              << " episodes (goal rate " << report.goal_rate << ", mean ticks " << report.mean_ticks << ")\n"
              << "report written to " << out.string() << std::endl;
  }
  return kExitOk;
}

int run_heatmap(const HeatmapArgs& a) {
  const fs::path report_path = a.report.empty() ? fs::path(a.run) / "eval" / "report.json" : fs::path(a.report);
  const roe::EvalReport report = roe::EvalReport::from_json(read_json_file(report_path));
  const fs::path out = a.output.empty() ? report_path.parent_path() : fs::path(a.output);
  std::cout << "effective configuration:\n"
            << nlohmann::json{{"report", report_path.string()}, {"clip", a.clip}, {"output", out.string()}}.dump(2)
            << std::endl;
  roe::heatmap_export(report, a.clip, out);
  std::cout << "wrote " << (out / "heatmap.csv").string() << " and " << (out / "heatmap.pgm").string() << std::endl;
  return kExitOk;
}

int run_trace(const TraceArgs& a) {
  if (!a.checkpoint.empty()) {
    // Buffer snapshot stored inside a checkpoint: print the current episodic means.
    const roe::Checkpoint ckpt = roe::read_checkpoint(a.checkpoint);
    const roe::EventBuffer buffer = roe::EventBuffer::from_json(ckpt.meta.at("event_buffer"));
    const auto mean = buffer.temporal_mean();
    std::cout << "event,mean_occurrence\n";
    for (std::size_t i = 0; i < mean.size(); ++i) {
      const std::string& name = buffer.taxonomy().names()[i];
      if (a.events.empty() || std::find(a.events.begin(), a.events.end(), name) != a.events.end()) {
        std::cout << name << ',' << roe::format_double(mean[i]) << '\n';
      }
    }
    return kExitOk;
  }
  if (a.run.empty()) throw roe::ConfigError("trace needs --run or --checkpoint");
  const fs::path csv = fs::path(a.run) / "logs" / "events.csv";
  std::ifstream in(csv);
  if (!in) throw roe::ConfigError("cannot open " + csv.string());
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  std::vector<std::size_t> columns{0};
  for (const auto& ev : a.events) {
    const auto it = std::find(header.begin(), header.end(), ev);
    if (it == header.end()) throw roe::ConfigError("event '" + ev + "' is not a column of " + csv.string());
    columns.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  if (a.events.empty()) {
    for (std::size_t i = 1; i < header.size(); ++i) columns.push_back(i);
  }
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < columns.size(); ++k) std::cout << (k ? "," : "") << cells.at(columns[k]);
    std::cout << '\n';
  };
  emit(header);
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    emit(cells);
  }
  return kExitOk;
}

int run_adapt(const AdaptArgs& a) {
  roe::GridEnvConfig base = a.scenario_file ? roe::resolve_env_config("deathmatch", *a.scenario_file, std::nullopt)
                                            : roe::resolve_env_config("deathmatch", "", std::nullopt);
  // Use the episode cap and frame skip the deathmatch policies were trained with.
  const roe::Checkpoint meta = roe::read_checkpoint(a.roe);
  const roe::RunConfig trained = roe::RunConfig::from_json(meta.meta.at("run_config"));
  base.action_repeat = trained.frame_skip;
  if (trained.max_steps) base.max_steps = *trained.max_steps;
  nlohmann::json effective{{"roe_checkpoint", a.roe},
                           {"baseline_checkpoint", a.baseline},
                           {"episodes", a.episodes},
                           {"seed", a.seed}};
  if (!a.json) std::cout << "effective configuration:\n" << effective.dump(2) << std::endl;
  const roe::AdaptationTable table = roe::adaptation_study(a.roe, a.baseline, base, a.episodes, a.seed);
  if (!a.output.empty()) write_json_file(a.output, table.to_json());
  if (a.json) {
    std::cout << table.to_json().dump() << std::endl;
  } else {
    std::cout << table.to_text();
  }
  return kExitOk;
}

int run_list(bool json) {
  nlohmann::json out = nlohmann::json::array();
  for (roe::ScenarioKind kind : roe::all_scenario_kinds()) {
    const roe::ScenarioDef def = roe::builtin_scenario(kind);
    out.push_back({{"name", std::string(roe::to_string(kind))},
                   {"actions", def.can_attack ? 16 : 8},
                   {"events", def.taxonomy().size()},
                   {"width", def.width()},
                   {"height", def.height()},
                   {"description", def.description}});
  }
  if (json) {
    std::cout << out.dump(2) << std::endl;
    return kExitOk;
  }
  for (const auto& s : out) {
    std::cout << s["name"].get<std::string>() << "  (" << s["width"] << "x" << s["height"] << ", " << s["actions"]
              << " actions, " << s["events"] << " events)\n    " << s["description"].get<std::string>() << '\n';
  }
  std::cout << "deathmatch variants:";
  for (const auto& v : roe::deathmatch_variants()) std::cout << ' ' << v.name;
  std::cout << std::endl;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rarity-of-Events reinforcement learning lab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "roe 1.0.0");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train an A2C agent (extrinsic baseline or RoE)");
  train_cmd->add_option("--config", train.config, "JSON run configuration")->check(CLI::ExistingFile);
  train_cmd->add_option("--scenario", train.scenario, "Built-in scenario name");
  train_cmd->add_option("--scenario-file", train.scenario_file, "Scenario definition JSON")->check(CLI::ExistingFile);
  train_cmd->add_option("--variant", train.variant, "Deathmatch single-weapon variant");
  train_cmd->add_option("--mode", train.mode, "roe or extrinsic_baseline");
  train_cmd->add_option("--seed", train.seed, "Master seed");
  train_cmd->add_option("--steps", train.steps, "Total environment steps (agent decisions)");
  train_cmd->add_option("--output", train.output, "Run directory (default $ROE_OUTPUT_ROOT/<scenario>_<mode>_seed<n>)");
  train_cmd->add_option("--body", train.body, "Network body: compact or mlp");
  train_cmd->add_option("--threads", train.threads, "Environment stepping threads");
  train_cmd->add_option("--checkpoint-every", train.checkpoint_every, "Updates between step checkpoints");
  train_cmd->add_option("--resume", train.resume, "Resume from a checkpoint")->check(CLI::ExistingFile);
  train_cmd->add_flag("--quiet", train.quiet, "Suppress progress lines");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint with the stochastic policy");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Checkpoint path, or best/final inside --run")
      ->capture_default_str();
  eval_cmd->add_option("--run", eval.run, "Run directory (default: current directory)");
  eval_cmd->add_option("--scenario", eval.scenario, "Scenario (default: the training scenario)");
  eval_cmd->add_option("--variant", eval.variant, "Deathmatch variant");
  eval_cmd->add_option("--episodes", eval.episodes, "Evaluation episodes")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", eval.seed, "Evaluation seed");
  eval_cmd->add_option("--output", eval.output, "Report path (default <run>/eval/report.json)");
  eval_cmd->add_flag("--json", eval.json, "Print a machine-readable summary");

  HeatmapArgs heat;
  auto* heat_cmd = app.add_subcommand("heatmap", "Export the visitation heat map of an evaluation report");
  heat_cmd->add_option("--report", heat.report, "report.json (default <run>/eval/report.json)");
  heat_cmd->add_option("--run", heat.run, "Run directory");
  heat_cmd->add_option("--clip", heat.clip, "Rendering ceiling")->check(CLI::PositiveNumber);
  heat_cmd->add_option("--output", heat.output, "Output directory (default: next to the report)");

  TraceArgs trace;
  auto* trace_cmd = app.add_subcommand("trace", "Print event mean-occurrence curves");
  trace_cmd->add_option("--run", trace.run, "Run directory");
  trace_cmd->add_option("--event", trace.events, "Event name (repeatable; default all)");
  trace_cmd->add_option("--checkpoint", trace.checkpoint, "Print the event buffer stored in a checkpoint instead");

  AdaptArgs adapt;
  auto* adapt_cmd = app.add_subcommand("adapt", "Compare two deathmatch policies on the single-weapon variants");
  adapt_cmd->add_option("--roe", adapt.roe, "RoE-trained checkpoint")->required()->check(CLI::ExistingFile);
  adapt_cmd->add_option("--baseline", adapt.baseline, "Baseline checkpoint")->required()->check(CLI::ExistingFile);
  adapt_cmd->add_option("--scenario-file", adapt.scenario_file, "Base deathmatch definition");
  adapt_cmd->add_option("--episodes", adapt.episodes, "Episodes per variant and arm")->check(CLI::PositiveNumber);
  adapt_cmd->add_option("--seed", adapt.seed, "Evaluation seed");
  adapt_cmd->add_option("--output", adapt.output, "Write the table as JSON");
  adapt_cmd->add_flag("--json", adapt.json, "Print the table as JSON");

  bool list_json = false;
  auto* list_cmd = app.add_subcommand("list-scenarios", "List built-in scenarios");
  list_cmd->add_flag("--json", list_json, "JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) return run_train(train);
    if (*eval_cmd) return run_eval(eval);
    if (*heat_cmd) return run_heatmap(heat);
    if (*trace_cmd) return run_trace(trace);
    if (*adapt_cmd) return run_adapt(adapt);
    if (*list_cmd) return run_list(list_json);
  } catch (const roe::ConfigError& e) {
    std::cerr << "roe: configuration error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "roe: malformed input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "roe: error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
