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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "roe/events.hpp"
#include "roe/rng.hpp"

namespace roe {

// ---------------------------------------------------------------------------
// Static tables
// ---------------------------------------------------------------------------

enum class ScenarioKind { health_gathering, health_gathering_supreme, my_way_home, deadly_corridor, deathmatch };

std::string_view to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(std::string_view name);
const std::vector<ScenarioKind>& all_scenario_kinds();

enum class EnemyType { Zombieman, ShotgunGuy, MarineChainsawVzd, Demon, ChaingunGuy, HellKnight };

std::string_view to_string(EnemyType type);
/// Throws ConfigError for unknown names.
EnemyType enemy_type_from_string(std::string_view name);

struct EnemySpec {
  int hit_points;
  int damage;
  double attack_range;  // Euclidean, in cells
  double attack_prob;   // per tick, when the agent is in range and visible
  double chase_prob;    // per tick, when not attacking
  double kill_reward;
};

const EnemySpec& enemy_spec(EnemyType type);

/// Deathmatch kill reward schedule (raw, before any scaling).
double kill_reward(EnemyType type);
/// Same, by name; unknown names throw ConfigError.
double kill_reward(std::string_view type_name);

inline constexpr int kWeaponSlots = 10;

struct WeaponSpec {
  std::string_view name;
  int damage;
  int range;
  bool uses_ammo;
  int cooldown;       // ticks between shots
  int splash_damage;  // applied to the 8 cells around the impact point
  int ammo_on_pickup;
  int ammo_pack;
  int max_ammo;
};

/// Slots 0..9: fist, chainsaw, pistol, super shotgun, chaingun, rocket
/// launcher, plasma gun; 7..9 are unused placeholders.
const WeaponSpec& weapon_spec(int slot);

/// The single-weapon deathmatch variations, in table order.
struct VariantInfo {
  std::string_view name;
  int slot;
};
const std::vector<VariantInfo>& deathmatch_variants();
/// Accepts a variant name ("rocket") or a slot number ("5"). Throws ConfigError.
int variant_slot_from_string(std::string_view name);
std::string_view variant_name(int slot);

// ---------------------------------------------------------------------------
// Scenario definition (loadable from JSON)
// ---------------------------------------------------------------------------

enum class Facing : std::uint8_t { north = 0, east = 1, south = 2, west = 3 };

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

enum class ItemKind : std::uint8_t { medkit, armor, goal_armor, ammo, weapon };

struct Item {
  ItemKind kind = ItemKind::medkit;
  int slot = -1;  // weapons and ammo only
  Cell cell;
  friend bool operator==(const Item&, const Item&) = default;
};

struct EnemyPlacement {
  EnemyType type;
  Cell cell;
};

struct StartWeapon {
  int slot;
  int ammo;
};

struct RandomEnemies {
  int count = 0;
  std::vector<EnemyType> types;
  std::vector<double> weights;
  int respawn_delay = 0;  // ticks; 0 disables respawn
  double min_spawn_distance = 4.0;
};

struct ScenarioDef {
  std::string name;
  std::string description;
  ScenarioKind kind = ScenarioKind::health_gathering;
  std::vector<std::string> layout;  // '#' wall, '.' floor, 'S' spawn, legend chars
  std::vector<Cell> spawn_points;
  std::vector<Item> items;
  std::vector<EnemyPlacement> enemies;
  bool random_facing = false;
  Facing spawn_facing = Facing::east;

  int agent_health = 100;
  std::vector<StartWeapon> start_weapons;
  bool can_attack = true;
  std::vector<std::string> events;

  // Raw extrinsic rewards.
  double living_reward = 0.0;  // per tick alive
  double death_reward = 0.0;
  double goal_reward = 0.0;
  bool kill_rewards = false;
  /// Multiplier that maps raw rewards into [-100, 100] before normalization.
  double reward_scale = 1.0;

  int acid_period = 0;  // ticks; 0 disables acid
  int acid_damage = 0;
  int medkit_count = 0;  // random medkits kept on the map
  int medkit_heal = 25;
  int armor_points = 100;
  int item_respawn_delay = 0;  // ticks; 0 disables respawn of fixed items
  RandomEnemies random_enemies;
  double enemy_damage_scale = 1.0;
  double enemy_chase_scale = 1.0;
  double enemy_wake_distance = 0.0;  // dormant until the agent is this close; 0 = always awake

  int max_steps = 2100;
  int action_repeat = 4;
  int move_period = 1;  // ticks per cell while moving forward
  /// > 0: egocentric observation, a (2r+1) x (2r+1) window centred on the
  /// agent and rotated so that it faces up. 0: the whole map, north up.
  int view_radius = 0;
  /// false: the health, ammo and weapon planes are left at zero, as with a
  /// game screen rendered without its status bar.
  bool hud = true;

  int width() const { return layout.empty() ? 0 : static_cast<int>(layout.front().size()); }
  int height() const { return static_cast<int>(layout.size()); }
  bool is_wall(Cell c) const;
  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width() && c.y < height(); }

  EventTaxonomy taxonomy() const;
  void validate() const;
};

ScenarioDef scenario_from_json(const nlohmann::json& j);
ScenarioDef load_scenario_file(const std::filesystem::path& path);
/// Built-in definitions shipped with the library (core/scenarios/*.json).
ScenarioDef builtin_scenario(ScenarioKind kind);
std::string builtin_scenario_json(ScenarioKind kind);

// ---------------------------------------------------------------------------
// Environment
// ---------------------------------------------------------------------------

struct GridEnvConfig {
  ScenarioDef scenario;
  std::optional<int> variant;  // weapon slot kept in a deathmatch variation
  int max_steps = 2100;
  int action_repeat = 4;
  std::uint64_t seed = 0;

  static GridEnvConfig from_scenario(ScenarioDef def, std::uint64_t seed = 0);
  void validate() const;
};

GridEnvConfig make_variant(const GridEnvConfig& base, int weapon_slot);

/// Atomic action bits; a combined action is any OR of the enabled bits.
enum ActionBit : int { kForward = 1, kTurnLeft = 2, kTurnRight = 4, kAttack = 8 };

struct Enemy {
  EnemyType type = EnemyType::Zombieman;
  Cell cell;
  int hp = 0;
  int respawn_timer = 0;  // > 0 while dead and waiting to respawn
  bool awake = true;
  bool alive() const { return hp > 0; }
};

/// Cumulative per-episode counters that event detection diffs.
struct EventTotals {
  std::uint32_t movement = 0;
  std::uint32_t shots = 0;
  std::uint32_t medkits = 0;
  std::uint32_t armor = 0;
  std::uint32_t ammo = 0;
  std::array<std::uint32_t, kWeaponSlots> weapon_pickups{};
  std::array<std::uint32_t, kWeaponSlots> kills{};
  std::uint32_t items_spawned = 0;
  friend bool operator==(const EventTotals&, const EventTotals&) = default;
};

struct EnvState {
  Cell agent;
  Facing facing = Facing::east;
  Cell movement_anchor;
  int health = 0;
  int armor = 0;
  std::array<bool, kWeaponSlots> owned{};
  std::array<int, kWeaponSlots> ammo{};
  int weapon = 0;
  int cooldown = 0;
  std::vector<Item> items;
  std::vector<std::pair<Item, int>> pending_items;  // item, ticks until it reappears
  std::vector<Enemy> enemies;
  int tick = 0;
  bool done = false;
  bool dead = false;
  bool goal_reached = false;
  double episode_extrinsic = 0.0;
  EventTotals totals;
  Rng rng;

  nlohmann::json to_json() const;
  static EnvState from_json(const nlohmann::json& j);
};

struct ObservationShape {
  int channels = 0;
  int height = 0;
  int width = 0;
  int size() const { return channels * height * width; }
  friend bool operator==(const ObservationShape&, const ObservationShape&) = default;
};

/// Channels-major dense grid encoding; every value lies in [0, 1].
struct Observation {
  ObservationShape shape;
  std::vector<double> data;
};

inline constexpr int kObservationChannels = 13;

struct StepResult {
  Observation observation;
  double extrinsic_reward = 0.0;  // raw, summed over the repeated ticks
  EventVector events;
  bool done = false;
  Cell position;
  int ticks = 0;  // ticks simulated for this decision
};

/// Event vector for one transition: differences of the cumulative counters,
/// projected onto `taxonomy` (events outside the taxonomy are dropped).
EventVector detect_events(const EnvState& prev, const EnvState& next, const EventTaxonomy& taxonomy);

class GridEnv {
 public:
  explicit GridEnv(GridEnvConfig config);

  /// Starts a fresh episode using the configured seed.
  Observation reset();
  Observation reset(std::uint64_t seed);
  StepResult step(int action);

  const EnvState& state() const { return state_; }
  void restore(EnvState state) { state_ = std::move(state); }

  const GridEnvConfig& config() const { return config_; }
  const ScenarioDef& scenario() const { return config_.scenario; }
  const EventTaxonomy& taxonomy() const { return taxonomy_; }
  int action_count() const { return config_.scenario.can_attack ? 16 : 8; }
  ObservationShape observation_shape() const;

  Observation observe() const;
  void observe_into(std::span<double> out) const;

 private:
  void observe_map(std::span<double> out) const;
  void tick(int action, int sub_tick);
  void fire_weapon();
  void damage_enemy(std::size_t index, int damage);
  void enemies_act();
  void damage_agent(int amount);
  void pick_up_items();
  void maintain_spawns();
  bool cell_free(Cell c, bool allow_items) const;
  std::optional<Cell> random_free_cell(double min_distance_from_agent);
  bool line_of_sight(Cell a, Cell b) const;
  void select_best_weapon();

  GridEnvConfig config_;
  EventTaxonomy taxonomy_;
  EnvState state_;
  double tick_reward_ = 0.0;
};

}  // namespace roe
