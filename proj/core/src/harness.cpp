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
#include "roe/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "roe/checkpoint.hpp"
#include "roe/errors.hpp"

namespace roe {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kNetStream = 1001;
constexpr std::uint64_t kRolloutStream = 2002;
constexpr std::uint64_t kUpdateStream = 3003;

void append_line(const fs::path& path, const std::string& line) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to " + path.string());
  out << line << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

/// Drops data rows whose leading step column exceeds `step` (used when resuming).
void truncate_csv_after(const fs::path& path, std::int64_t step) {
  std::ifstream in(path);
  if (!in) return;
  std::string line;
  std::string kept;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      kept += line + '\n';
      header = false;
      continue;
    }
    const auto comma = line.find(',');
    const std::int64_t row_step = std::stoll(line.substr(0, comma));
    if (row_step <= step) kept += line + '\n';
  }
  in.close();
  write_text(path, kept);
}

nlohmann::json optional_double(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf.data(), ptr);
}

std::string_view to_string(TrainMode mode) { return mode == TrainMode::roe ? "roe" : "extrinsic_baseline"; }

TrainMode train_mode_from_string(std::string_view name) {
  if (name == "roe") return TrainMode::roe;
  if (name == "extrinsic_baseline" || name == "baseline" || name == "extrinsic") return TrainMode::extrinsic_baseline;
  throw ConfigError("unknown mode '" + std::string(name) + "' (expected roe or extrinsic_baseline)");
}

// ---------------------------------------------------------------------------
// RunConfig

int RunConfig::effective_workers() const {
  if (workers) return *workers;
  const bool deathmatch = scenario_file.empty() && scenario == "deathmatch";
  return deathmatch ? 16 : 4;
}

A2CConfig RunConfig::a2c() const {
  A2CConfig c;
  c.gamma = gamma;
  c.t_max = t_max;
  c.workers = effective_workers();
  c.batch_size = batch_size;
  c.coefs = {value_coef, entropy_coef, max_grad_norm, learning_rate};
  c.rmsprop = {rmsprop_alpha, rmsprop_eps};
  return c;
}

RoEConfig RunConfig::roe() const { return {tau, static_cast<std::size_t>(std::max(buffer_size, 0))}; }

GridEnvConfig resolve_env_config(const std::string& scenario, const std::string& scenario_file,
                                 std::optional<int> variant) {
  ScenarioDef def = scenario_file.empty() ? builtin_scenario(scenario_kind_from_string(scenario))
                                          : load_scenario_file(scenario_file);
  GridEnvConfig cfg = GridEnvConfig::from_scenario(std::move(def));
  if (variant) cfg = make_variant(cfg, *variant);
  cfg.validate();
  return cfg;
}

GridEnvConfig RunConfig::env_config() const {
  GridEnvConfig cfg = resolve_env_config(scenario, scenario_file, variant);
  cfg.action_repeat = frame_skip;
  if (max_steps) cfg.max_steps = *max_steps;
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

NetConfig RunConfig::net_config(const GridEnv& env) const {
  NetConfig cfg;
  if (body == "compact") {
    cfg = NetConfig::compact(env.observation_shape(), env.action_count());
    cfg.hidden = hidden;
  } else if (body == "mlp") {
    cfg = NetConfig::mlp(env.observation_shape(), env.action_count(), hidden);
  } else {
    throw ConfigError("unknown network body '" + body + "' (expected compact or mlp)");
  }
  cfg.validate();
  return cfg;
}

void RunConfig::validate() const {
  a2c().validate();
  roe().validate();
  if (buffer_size < 1) throw ConfigError("buffer_size must be >= 1");
  if (frame_skip < 1) throw ConfigError("frame_skip must be >= 1");
  if (episode_window < 1) throw ConfigError("episode_window must be >= 1");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (total_steps < static_cast<std::int64_t>(effective_workers()) * t_max) {
    throw ConfigError("total_steps must cover at least one update (workers x t_max)");
  }
  if (body != "compact" && body != "mlp") throw ConfigError("unknown network body '" + body + "'");
  (void)env_config();
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j{
      {"scenario", scenario},
      {"scenario_file", scenario_file},
      {"variant", variant ? nlohmann::json(std::string(variant_name(*variant))) : nlohmann::json(nullptr)},
      {"mode", std::string(to_string(mode))},
      {"total_steps", total_steps},
      {"seed", seed},
      {"output_dir", output_dir.string()},
      {"learning_rate", learning_rate},
      {"gamma", gamma},
      {"entropy_coef", entropy_coef},
      {"value_coef", value_coef},
      {"max_grad_norm", max_grad_norm},
      {"workers", effective_workers()},
      {"t_max", t_max},
      {"batch_size", batch_size},
      {"frame_skip", frame_skip},
      {"rmsprop_eps", rmsprop_eps},
      {"rmsprop_alpha", rmsprop_alpha},
      {"buffer_size", buffer_size},
      {"tau", tau},
      {"body", body},
      {"hidden", hidden},
      {"max_steps", max_steps ? nlohmann::json(*max_steps) : nlohmann::json(nullptr)},
      {"normalization", std::string(to_string(normalization))},
      {"episode_window", episode_window},
      {"checkpoint_every", checkpoint_every},
      {"threads", threads},
  };
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j, RunConfig c) {
  static const std::set<std::string> known{
      "scenario",    "scenario_file", "variant",       "mode",           "total_steps",      "seed",
      "output_dir",  "learning_rate", "gamma",         "entropy_coef",   "value_coef",       "max_grad_norm",
      "workers",     "t_max",         "batch_size",    "frame_skip",     "rmsprop_eps",      "rmsprop_alpha",
      "buffer_size", "tau",           "body",          "hidden",         "max_steps",        "normalization",
      "episode_window", "checkpoint_every", "threads", ""};
  if (!j.is_object()) throw ConfigError("run config: expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError("run config: unknown key '" + key + "'");
  }
  try {
    auto get = [&](const char* key, auto& out) {
      if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<std::decay_t<decltype(out)>>();
    };
    get("scenario", c.scenario);
    get("scenario_file", c.scenario_file);
    if (auto it = j.find("variant"); it != j.end()) {
      if (it->is_null()) c.variant.reset();
      else if (it->is_number_integer()) c.variant = variant_slot_from_string(std::to_string(it->get<int>()));
      else c.variant = variant_slot_from_string(it->get<std::string>());
    }
    if (auto it = j.find("mode"); it != j.end()) c.mode = train_mode_from_string(it->get<std::string>());
    get("total_steps", c.total_steps);
    get("seed", c.seed);
    if (auto it = j.find("output_dir"); it != j.end()) c.output_dir = it->get<std::string>();
    get("learning_rate", c.learning_rate);
    get("gamma", c.gamma);
    get("entropy_coef", c.entropy_coef);
    get("value_coef", c.value_coef);
    get("max_grad_norm", c.max_grad_norm);
    if (auto it = j.find("workers"); it != j.end()) {
      if (it->is_null()) c.workers.reset();
      else c.workers = it->get<int>();
    }
    get("t_max", c.t_max);
    get("batch_size", c.batch_size);
    get("frame_skip", c.frame_skip);
    get("rmsprop_eps", c.rmsprop_eps);
    get("rmsprop_alpha", c.rmsprop_alpha);
    get("buffer_size", c.buffer_size);
    get("tau", c.tau);
    get("body", c.body);
    get("hidden", c.hidden);
    if (auto it = j.find("max_steps"); it != j.end()) {
      if (it->is_null()) c.max_steps.reset();
      else c.max_steps = it->get<int>();
    }
    if (auto it = j.find("normalization"); it != j.end()) {
      c.normalization = normalization_mode_from_string(it->get<std::string>());
    }
    get("episode_window", c.episode_window);
    get("checkpoint_every", c.checkpoint_every);
    get("threads", c.threads);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) { return from_json(j, RunConfig{}); }

// ---------------------------------------------------------------------------
// Trainer

struct Trainer::Impl {
  RunConfig config;
  GridEnvConfig env_config;
  A2CConfig a2c;
  PolicyValueNet net;
  RolloutCollector collector;
  EventBuffer buffer;
  Rng update_rng;
  std::int64_t steps = 0;
  std::int64_t updates = 0;
  std::int64_t episodes = 0;
  std::vector<std::deque<double>> windows;
  double best = -std::numeric_limits<double>::infinity();
  std::optional<double> last_mean;
  std::vector<DiagnosticsRow> history;

  explicit Impl(RunConfig cfg)
      : config(std::move(cfg)),
        env_config(config.env_config()),
        a2c(config.a2c()),
        net(config.net_config(GridEnv(env_config)), derive_seed(config.seed, kNetStream)),
        collector(env_config, a2c.workers, derive_seed(config.seed, kRolloutStream), config.threads),
        buffer(collector.taxonomy(), config.roe().buffer_capacity),
        update_rng(derive_seed(config.seed, kUpdateStream)),
        windows(static_cast<std::size_t>(a2c.workers)) {}

  fs::path dir(const char* sub) const { return config.output_dir / sub; }
  fs::path diagnostics_csv() const { return config.output_dir / "logs" / "diagnostics.csv"; }
  fs::path events_csv() const { return config.output_dir / "logs" / "events.csv"; }
  fs::path episodes_csv() const { return config.output_dir / "logs" / "episodes.csv"; }

  void prepare_directory(bool fresh) {
    fs::create_directories(dir("logs"));
    fs::create_directories(dir("checkpoints"));
    write_text(config.output_dir / "config.json", config.to_json().dump(2) + "\n");
    auto header = [&](const fs::path& p, const std::string& h) {
      if (fresh || !fs::exists(p)) {
        write_text(p, h + "\n");
      } else {
        truncate_csv_after(p, steps);
      }
    };
    header(diagnostics_csv(),
           "step,mean_extrinsic_episode_reward,mean_intrinsic_reward,policy_loss,value_loss,entropy,grad_norm");
    std::string ev = "step";
    for (const auto& n : buffer.taxonomy().names()) ev += "," + n;
    header(events_csv(), ev);
    header(episodes_csv(), "step,worker,extrinsic,ticks,goal,died");
  }

  std::optional<double> current_mean() const {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& w : windows) {
      if (w.empty()) return std::nullopt;
      for (double v : w) sum += v;
      count += w.size();
    }
    return sum / static_cast<double>(count);
  }

  nlohmann::json meta() const {
    nlohmann::json win = nlohmann::json::array();
    for (const auto& w : windows) win.push_back(std::vector<double>(w.begin(), w.end()));
    return {{"format", "roe-checkpoint"},
            {"run_config", config.to_json()},
            {"net_config", net.config().to_json()},
            {"scenario", env_config.scenario.name},
            {"taxonomy", buffer.taxonomy().to_json()},
            {"event_buffer", buffer.to_json()},
            {"step", steps},
            {"updates", updates},
            {"episodes", episodes},
            {"best_mean_extrinsic", std::isfinite(best) ? nlohmann::json(best) : nlohmann::json(nullptr)},
            {"recorded_mean_extrinsic", optional_double(last_mean)},
            {"windows", win},
            {"update_rng", rng_to_string(update_rng)},
            {"workers", collector.state_json()}};
  }

  void save(const fs::path& path) const { write_checkpoint(path, {meta(), net.parameters(), net.rmsprop_state()}); }

  bool step() {
    if (steps >= config.total_steps) return false;
    RewardSettings rs;
    rs.tau = config.tau;
    rs.normalization = config.normalization;
    if (config.mode == TrainMode::roe) {
      rs.roe_snapshot = buffer.temporal_mean();
    } else {
      rs.log_snapshot = buffer.temporal_mean();
    }
    SegmentResult seg = collector.collect(net, rs, a2c.t_max);

    for (const auto& f : seg.finished) {
      buffer.push_episode(f.events);
      auto& w = windows[static_cast<std::size_t>(f.worker)];
      w.push_back(f.extrinsic);
      while (static_cast<int>(w.size()) > config.episode_window) w.pop_front();
      ++episodes;
    }
    const UpdateDiagnostics diag = update(net, seg.trajectories, a2c, update_rng);
    steps += static_cast<std::int64_t>(seg.transitions);
    ++updates;

    for (const auto& f : seg.finished) {
      append_line(episodes_csv(), std::to_string(steps) + "," + std::to_string(f.worker) + "," +
                                      format_double(f.extrinsic) + "," + std::to_string(f.ticks) + "," +
                                      (f.goal ? "1" : "0") + "," + (f.died ? "1" : "0"));
    }

    last_mean = current_mean();
    DiagnosticsRow row{steps, last_mean, seg.mean_intrinsic, diag};
    history.push_back(row);
    append_line(diagnostics_csv(), std::to_string(steps) + "," + (last_mean ? format_double(*last_mean) : "") + "," +
                                       format_double(seg.mean_intrinsic) + "," + format_double(diag.policy_loss) +
                                       "," + format_double(diag.value_loss) + "," + format_double(diag.entropy) +
                                       "," + format_double(diag.grad_norm));
    std::string ev = std::to_string(steps);
    for (double m : buffer.temporal_mean()) ev += "," + format_double(m);
    append_line(events_csv(), ev);

    if (last_mean && checkpoint_if_improved(*last_mean, best)) {
      best = *last_mean;
      save(dir("checkpoints") / "best.ckpt");
    }
    if (config.checkpoint_every > 0 && updates % config.checkpoint_every == 0) {
      save(dir("checkpoints") / ("step_" + std::to_string(steps) + ".ckpt"));
    }
    return steps < config.total_steps;
  }
};

Trainer::Trainer(RunConfig config) {
  config.validate();
  impl_ = std::make_unique<Impl>(std::move(config));
  impl_->prepare_directory(true);
}

Trainer::Trainer(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Trainer::Trainer(Trainer&&) noexcept = default;
Trainer& Trainer::operator=(Trainer&&) noexcept = default;
Trainer::~Trainer() = default;

Trainer Trainer::resume(const fs::path& checkpoint, std::optional<std::int64_t> total_steps,
                        std::optional<fs::path> output_dir) {
  Checkpoint ckpt = read_checkpoint(checkpoint);
  const auto& m = ckpt.meta;
  try {
    RunConfig cfg = RunConfig::from_json(m.at("run_config"));
    if (total_steps) cfg.total_steps = *total_steps;
    if (output_dir) cfg.output_dir = *output_dir;
    cfg.validate();
    auto impl = std::make_unique<Impl>(cfg);
    if (NetConfig::from_json(m.at("net_config")) != impl->net.config()) {
      throw ConfigError("resume: checkpoint network does not match the run configuration");
    }
    if (ckpt.parameters.size() != impl->net.parameters().size()) {
      throw ConfigError("resume: checkpoint parameter count does not match the network");
    }
    impl->net.parameters() = ckpt.parameters;
    impl->net.rmsprop_state() = ckpt.optimizer_state;
    impl->buffer = EventBuffer::from_json(m.at("event_buffer"));
    impl->steps = m.at("step").get<std::int64_t>();
    impl->updates = m.at("updates").get<std::int64_t>();
    impl->episodes = m.at("episodes").get<std::int64_t>();
    if (!m.at("best_mean_extrinsic").is_null()) impl->best = m.at("best_mean_extrinsic").get<double>();
    if (!m.at("recorded_mean_extrinsic").is_null()) impl->last_mean = m.at("recorded_mean_extrinsic").get<double>();
    const auto& win = m.at("windows");
    if (win.size() != impl->windows.size()) throw ConfigError("resume: worker count mismatch");
    for (std::size_t i = 0; i < win.size(); ++i) {
      const auto values = win[i].get<std::vector<double>>();
      impl->windows[i] = std::deque<double>(values.begin(), values.end());
    }
    impl->update_rng = rng_from_string(m.at("update_rng").get<std::string>());
    impl->collector.restore(m.at("workers"));
    impl->prepare_directory(false);
    return Trainer(std::move(impl));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("resume: malformed checkpoint metadata: ") + e.what());
  }
}

bool Trainer::step() { return impl_->step(); }

TrainSummary Trainer::run() {
  while (impl_->step()) {
  }
  impl_->save(impl_->dir("checkpoints") / "final.ckpt");
  TrainSummary s;
  s.steps = impl_->steps;
  s.updates = impl_->updates;
  s.episodes = impl_->episodes;
  s.best_mean_extrinsic = impl_->best;
  s.run_dir = impl_->config.output_dir;
  return s;
}

const RunConfig& Trainer::config() const { return impl_->config; }
const PolicyValueNet& Trainer::net() const { return impl_->net; }
const EventBuffer& Trainer::buffer() const { return impl_->buffer; }
std::int64_t Trainer::steps_done() const { return impl_->steps; }
const std::vector<DiagnosticsRow>& Trainer::history() const { return impl_->history; }
void Trainer::save_checkpoint(const fs::path& path) const { impl_->save(path); }

TrainSummary train(const RunConfig& config) { return Trainer(config).run(); }

// ---------------------------------------------------------------------------
// Evaluation

nlohmann::json EvalReport::to_json() const {
  return {{"scenario", scenario},
          {"variant", variant ? nlohmann::json(std::string(variant_name(*variant))) : nlohmann::json(nullptr)},
          {"seed", seed},
          {"episodes", episodes()},
          {"mean", mean},
          {"std", std},
          {"goal_rate", goal_rate},
          {"mean_ticks", mean_ticks},
          {"scores", scores},
          {"ticks", ticks},
          {"goal", goal},
          {"died", died},
          {"taxonomy", taxonomy.to_json()},
          {"event_means", event_means},
          {"width", width},
          {"height", height},
          {"visitation", visitation}};
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  try {
    EvalReport r;
    r.scenario = j.at("scenario").get<std::string>();
    if (!j.at("variant").is_null()) r.variant = variant_slot_from_string(j.at("variant").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    r.mean = j.at("mean").get<double>();
    r.std = j.at("std").get<double>();
    r.goal_rate = j.at("goal_rate").get<double>();
    r.mean_ticks = j.at("mean_ticks").get<double>();
    r.scores = j.at("scores").get<std::vector<double>>();
    r.ticks = j.at("ticks").get<std::vector<int>>();
    r.goal = j.at("goal").get<std::vector<std::uint8_t>>();
    r.died = j.at("died").get<std::vector<std::uint8_t>>();
    r.taxonomy = EventTaxonomy::from_json(j.at("taxonomy"));
    r.event_means = j.at("event_means").get<std::vector<double>>();
    r.width = j.at("width").get<int>();
    r.height = j.at("height").get<int>();
    r.visitation = j.at("visitation").get<std::vector<double>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("eval report: malformed JSON: ") + e.what());
  }
}

EvalReport evaluate(const PolicyValueNet& net, const GridEnvConfig& env_config, int episodes, std::uint64_t seed) {
  if (episodes < 1) throw ContractError("evaluate: episodes must be positive");
  constexpr int kLanes = 16;
  const int lanes = std::min(kLanes, episodes);
  std::vector<GridEnv> envs;
  envs.reserve(static_cast<std::size_t>(lanes));
  for (int i = 0; i < lanes; ++i) envs.emplace_back(env_config);
  const GridEnv& probe = envs.front();
  if (net.config().input != probe.observation_shape() || net.config().action_count != probe.action_count()) {
    throw ConfigError("evaluate: checkpoint network (" + std::to_string(net.config().action_count) +
                      " actions) does not fit scenario '" + env_config.scenario.name + "' (" +
                      std::to_string(probe.action_count()) + " actions)");
  }

  EvalReport report;
  report.scenario = std::string(to_string(env_config.scenario.kind));
  report.variant = env_config.variant;
  report.seed = seed;
  report.taxonomy = probe.taxonomy();
  report.width = env_config.scenario.width();
  report.height = env_config.scenario.height();
  report.scores.assign(static_cast<std::size_t>(episodes), 0.0);
  report.ticks.assign(static_cast<std::size_t>(episodes), 0);
  report.goal.assign(static_cast<std::size_t>(episodes), 0);
  report.died.assign(static_cast<std::size_t>(episodes), 0);
  std::vector<double> visits(static_cast<std::size_t>(report.width * report.height), 0.0);
  EventVector event_totals(report.taxonomy.size());

  const auto obs_size = static_cast<Eigen::Index>(probe.observation_shape().size());
  for (int first = 0; first < episodes; first += lanes) {
    const int count = std::min(lanes, episodes - first);
    std::vector<Rng> rngs;
    std::vector<int> active;
    for (int i = 0; i < count; ++i) {
      const auto e = static_cast<std::uint64_t>(first + i);
      envs[static_cast<std::size_t>(i)].reset(derive_seed(seed, 2 * e));
      rngs.emplace_back(derive_seed(seed, 2 * e + 1));
      active.push_back(i);
    }
    while (!active.empty()) {
      Eigen::MatrixXd batch(obs_size, static_cast<Eigen::Index>(active.size()));
      for (std::size_t k = 0; k < active.size(); ++k) {
        envs[static_cast<std::size_t>(active[k])].observe_into(
            {batch.col(static_cast<Eigen::Index>(k)).data(), static_cast<std::size_t>(obs_size)});
      }
      const ForwardResult fwd = net.forward(batch);
      std::vector<int> still;
      for (std::size_t k = 0; k < active.size(); ++k) {
        const int lane = active[k];
        GridEnv& env = envs[static_cast<std::size_t>(lane)];
        const Cell pos = env.state().agent;
        visits[static_cast<std::size_t>(pos.y * report.width + pos.x)] += 1.0;
        const int action = sample_action(
            {fwd.probs.col(static_cast<Eigen::Index>(k)).data(), static_cast<std::size_t>(fwd.probs.rows())},
            rngs[static_cast<std::size_t>(lane)]);
        const StepResult sr = env.step(action);
        event_totals += sr.events;
        if (!sr.done) {
          still.push_back(lane);
          continue;
        }
        const auto e = static_cast<std::size_t>(first + lane);
        const EnvState& s = env.state();
        report.scores[e] = s.episode_extrinsic;
        report.ticks[e] = s.tick;
        report.goal[e] = s.goal_reached ? 1 : 0;
        report.died[e] = s.dead ? 1 : 0;
      }
      active = std::move(still);
    }
  }

  report.mean = roe::mean(report.scores);
  report.std = sample_std(report.scores);
  double goals = 0.0;
  double ticks = 0.0;
  for (std::size_t e = 0; e < report.scores.size(); ++e) {
    goals += report.goal[e];
    ticks += report.ticks[e];
  }
  report.goal_rate = goals / episodes;
  report.mean_ticks = ticks / episodes;
  for (std::size_t i = 0; i < event_totals.size(); ++i) {
    report.event_means.push_back(static_cast<double>(event_totals[i]) / episodes);
  }
  double total_visits = 0.0;
  for (double v : visits) total_visits += v;
  for (double& v : visits) v /= total_visits;
  report.visitation = std::move(visits);
  return report;
}

PolicyValueNet load_policy(const fs::path& checkpoint) {
  Checkpoint ckpt = read_checkpoint(checkpoint);
  NetConfig cfg;
  try {
    cfg = NetConfig::from_json(ckpt.meta.at("net_config"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint: missing net_config: ") + e.what());
  }
  PolicyValueNet net(cfg, 0);
  if (ckpt.parameters.size() != net.parameters().size()) {
    throw ConfigError("checkpoint: parameter count does not match its network config");
  }
  net.parameters() = ckpt.parameters;
  net.rmsprop_state() = ckpt.optimizer_state;
  return net;
}

EvalReport evaluate_checkpoint(const fs::path& checkpoint, const GridEnvConfig& env_config, int episodes,
                               std::uint64_t seed) {
  return evaluate(load_policy(checkpoint), env_config, episodes, seed);
}

void heatmap_export(const EvalReport& report, double clip, const fs::path& directory) {
  if (!(clip > 0.0)) throw ContractError("heatmap_export: clip must be positive");
  if (report.visitation.size() != static_cast<std::size_t>(report.width * report.height)) {
    throw ContractError("heatmap_export: report has no visitation grid");
  }
  fs::create_directories(directory);
  std::string csv;
  std::ostringstream pgm;
  pgm << "P2\n" << report.width << ' ' << report.height << "\n255\n";
  for (int y = 0; y < report.height; ++y) {
    for (int x = 0; x < report.width; ++x) {
      const double p = report.visitation[static_cast<std::size_t>(y * report.width + x)];
      csv += (x ? "," : "") + format_double(p);
      const auto level = static_cast<int>(std::lround(std::min(p, clip) / clip * 255.0));
      pgm << (x ? " " : "") << level;
    }
    csv += '\n';
    pgm << '\n';
  }
  write_text(directory / "heatmap.csv", csv);
  write_text(directory / "heatmap.pgm", pgm.str());
}

// ---------------------------------------------------------------------------
// Adaptation study

nlohmann::json AdaptationTable::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"variant", r.variant},
                   {"roe_mean", r.roe_mean},
                   {"roe_std", r.roe_std},
                   {"baseline_mean", r.baseline_mean},
                   {"baseline_std", r.baseline_std},
                   {"t", r.test.t},
                   {"df", r.test.df},
                   {"p", r.test.p_two_sided}});
  }
  return out;
}

std::string AdaptationTable::to_text() const {
  std::ostringstream os;
  os << std::left << std::setw(12) << "variant" << std::right << std::setw(22) << "A2C" << std::setw(22) << "A2C+RoE"
     << std::setw(12) << "p" << '\n';
  os << std::fixed << std::setprecision(2);
  for (const auto& r : rows) {
    std::ostringstream a;
    std::ostringstream b;
    a << std::fixed << std::setprecision(2) << r.baseline_mean << " +- " << r.baseline_std;
    b << std::fixed << std::setprecision(2) << r.roe_mean << " +- " << r.roe_std;
    os << std::left << std::setw(12) << r.variant << std::right << std::setw(22) << a.str() << std::setw(22) << b.str()
       << std::setw(12) << std::setprecision(4) << r.test.p_two_sided << std::setprecision(2) << '\n';
  }
  return os.str();
}

AdaptationTable adaptation_study(const fs::path& roe_checkpoint, const fs::path& baseline_checkpoint,
                                 const GridEnvConfig& base_env, int episodes, std::uint64_t seed) {
  const PolicyValueNet roe_net = load_policy(roe_checkpoint);
  const PolicyValueNet base_net = load_policy(baseline_checkpoint);
  AdaptationTable table;
  std::uint64_t v = 0;
  for (const auto& info : deathmatch_variants()) {
    const GridEnvConfig cfg = make_variant(base_env, info.slot);
    EvalReport r = evaluate(roe_net, cfg, episodes, derive_seed(seed, 2 * v));
    EvalReport b = evaluate(base_net, cfg, episodes, derive_seed(seed, 2 * v + 1));
    table.rows.push_back({std::string(info.name), r.mean, r.std, b.mean, b.std, welch_t_test(r.scores, b.scores)});
    table.roe_reports.push_back(std::move(r));
    table.baseline_reports.push_back(std::move(b));
    ++v;
  }
  return table;
}

}  // namespace roe
