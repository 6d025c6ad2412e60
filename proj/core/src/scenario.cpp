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
// Static tables and JSON loading for grid scenarios.

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "roe/errors.hpp"
#include "roe/gridenv.hpp"

namespace roe {

namespace {

constexpr std::array<std::string_view, 5> kScenarioNames{
    "health_gathering", "health_gathering_supreme", "my_way_home", "deadly_corridor", "deathmatch"};

constexpr std::array<std::string_view, 6> kEnemyNames{"Zombieman",   "ShotgunGuy",  "MarineChainsawVzd",
                                                      "Demon",       "ChaingunGuy", "HellKnight"};

// hp, damage, range, attack p, chase p, kill reward
constexpr std::array<EnemySpec, 6> kEnemySpecs{{
    {2, 4, 5.0, 0.10, 0.10, 100.0},
    {3, 6, 4.0, 0.10, 0.10, 300.0},
    {4, 8, 1.5, 0.50, 0.25, 300.0},
    {5, 6, 1.5, 0.50, 0.25, 300.0},
    {5, 2, 6.0, 0.30, 0.08, 400.0},
    {10, 10, 5.0, 0.10, 0.06, 1000.0},
}};

// name, damage, range, ammo, cooldown, splash, ammo on pickup, ammo pack, max ammo
constexpr std::array<WeaponSpec, kWeaponSlots> kWeapons{{
    {"fist", 1, 1, false, 4, 0, 0, 0, 0},
    {"chainsaw", 2, 1, false, 1, 0, 0, 0, 0},
    {"pistol", 1, 8, true, 2, 0, 20, 10, 100},
    {"super_shotgun", 4, 4, true, 3, 0, 8, 8, 40},
    {"chaingun", 1, 8, true, 1, 0, 40, 20, 200},
    {"rocket_launcher", 4, 10, true, 4, 2, 5, 5, 30},
    {"plasma_gun", 2, 10, true, 1, 0, 40, 40, 200},
    {"unused_7", 0, 0, true, 1, 0, 0, 0, 0},
    {"unused_8", 0, 0, true, 1, 0, 0, 0, 0},
    {"unused_9", 0, 0, true, 1, 0, 0, 0, 0},
}};

const std::vector<VariantInfo> kVariants{
    {"chainsaw", 1}, {"chaingun", 4}, {"shotgun", 3}, {"plasma", 6}, {"rocket", 5}};

Facing facing_from_string(std::string_view s) {
  if (s == "north") return Facing::north;
  if (s == "east") return Facing::east;
  if (s == "south") return Facing::south;
  if (s == "west") return Facing::west;
  throw ConfigError("scenario: unknown facing '" + std::string(s) + "'");
}

ItemKind item_kind_from_string(std::string_view s) {
  if (s == "medkit") return ItemKind::medkit;
  if (s == "armor") return ItemKind::armor;
  if (s == "goal_armor") return ItemKind::goal_armor;
  if (s == "ammo") return ItemKind::ammo;
  if (s == "weapon") return ItemKind::weapon;
  throw ConfigError("scenario: unknown item kind '" + std::string(s) + "'");
}

void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError("scenario: unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

}  // namespace

std::string_view to_string(ScenarioKind kind) { return kScenarioNames.at(static_cast<std::size_t>(kind)); }

ScenarioKind scenario_kind_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kScenarioNames.size(); ++i) {
    if (kScenarioNames[i] == name) return static_cast<ScenarioKind>(i);
  }
  throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

const std::vector<ScenarioKind>& all_scenario_kinds() {
  static const std::vector<ScenarioKind> kinds{ScenarioKind::health_gathering, ScenarioKind::health_gathering_supreme,
                                               ScenarioKind::my_way_home, ScenarioKind::deadly_corridor,
                                               ScenarioKind::deathmatch};
  return kinds;
}

std::string_view to_string(EnemyType type) { return kEnemyNames.at(static_cast<std::size_t>(type)); }

EnemyType enemy_type_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kEnemyNames.size(); ++i) {
    if (kEnemyNames[i] == name) return static_cast<EnemyType>(i);
  }
  throw ConfigError("unknown enemy type '" + std::string(name) + "'");
}

const EnemySpec& enemy_spec(EnemyType type) { return kEnemySpecs.at(static_cast<std::size_t>(type)); }

double kill_reward(EnemyType type) { return enemy_spec(type).kill_reward; }
double kill_reward(std::string_view type_name) { return kill_reward(enemy_type_from_string(type_name)); }

const WeaponSpec& weapon_spec(int slot) {
  if (slot < 0 || slot >= kWeaponSlots) throw ContractError("weapon slot out of range");
  return kWeapons[static_cast<std::size_t>(slot)];
}

const std::vector<VariantInfo>& deathmatch_variants() { return kVariants; }

int variant_slot_from_string(std::string_view name) {
  for (const auto& v : kVariants) {
    if (v.name == name || std::to_string(v.slot) == name) return v.slot;
  }
  throw ConfigError("unknown deathmatch variant '" + std::string(name) +
                    "' (expected chainsaw, chaingun, shotgun, plasma or rocket)");
}

std::string_view variant_name(int slot) {
  for (const auto& v : kVariants) {
    if (v.slot == slot) return v.name;
  }
  throw ConfigError("no deathmatch variant keeps weapon slot " + std::to_string(slot));
}

bool ScenarioDef::is_wall(Cell c) const {
  if (!in_bounds(c)) return true;
  return layout[static_cast<std::size_t>(c.y)][static_cast<std::size_t>(c.x)] == '#';
}

EventTaxonomy ScenarioDef::taxonomy() const {
  if (events.empty()) return taxonomy_doom26();
  return taxonomy_doom26().subset(events);
}

void ScenarioDef::validate() const {
  if (layout.size() < 3 || layout.front().size() < 3) throw ConfigError("scenario '" + name + "': grid must be at least 3x3");
  for (const auto& row : layout) {
    if (row.size() != layout.front().size()) throw ConfigError("scenario '" + name + "': ragged layout rows");
  }
  if (spawn_points.empty()) throw ConfigError("scenario '" + name + "': no spawn point ('S')");
  for (const auto& s : spawn_points) {
    if (is_wall(s)) throw ConfigError("scenario '" + name + "': spawn point inside a wall");
  }
  for (const auto& it : items) {
    if (is_wall(it.cell)) throw ConfigError("scenario '" + name + "': item inside a wall");
    if ((it.kind == ItemKind::weapon || it.kind == ItemKind::ammo) && (it.slot < 0 || it.slot >= kWeaponSlots)) {
      throw ConfigError("scenario '" + name + "': weapon/ammo item needs a slot in 0..9");
    }
  }
  for (const auto& e : enemies) {
    if (is_wall(e.cell)) throw ConfigError("scenario '" + name + "': enemy inside a wall");
  }
  for (const auto& w : start_weapons) {
    if (w.slot < 0 || w.slot >= kWeaponSlots || w.ammo < 0) throw ConfigError("scenario '" + name + "': bad start weapon");
  }
  if (agent_health <= 0) throw ConfigError("scenario '" + name + "': agent health must be positive");
  if (max_steps < 1) throw ConfigError("scenario '" + name + "': max_steps must be >= 1");
  if (action_repeat < 1) throw ConfigError("scenario '" + name + "': action_repeat must be >= 1");
  if (move_period < 1) throw ConfigError("scenario '" + name + "': move_period must be >= 1");
  if (view_radius < 0) throw ConfigError("scenario '" + name + "': view_radius must be >= 0");
  if (acid_period < 0 || acid_damage < 0 || medkit_count < 0 || item_respawn_delay < 0) {
    throw ConfigError("scenario '" + name + "': negative spawn/acid constant");
  }
  if (!(reward_scale > 0.0)) throw ConfigError("scenario '" + name + "': reward_scale must be positive");
  if (!(enemy_damage_scale >= 0.0) || !(enemy_chase_scale >= 0.0) || !(enemy_wake_distance >= 0.0)) {
    throw ConfigError("scenario '" + name + "': enemy scales and wake distance must be non-negative");
  }
  if (random_enemies.count < 0) throw ConfigError("scenario '" + name + "': negative random enemy count");
  if (random_enemies.count > 0 && random_enemies.types.empty()) {
    throw ConfigError("scenario '" + name + "': random enemies need at least one type");
  }
  if (!random_enemies.weights.empty() && random_enemies.weights.size() != random_enemies.types.size()) {
    throw ConfigError("scenario '" + name + "': random enemy weights/types length mismatch");
  }
  (void)taxonomy();
}

ScenarioDef scenario_from_json(const nlohmann::json& j) {
  try {
    reject_unknown_keys(j,
                        {"name", "kind", "layout", "legend", "spawn", "agent", "can_attack", "events", "rewards",
                         "acid", "medkits", "armor_points", "item_respawn_delay", "random_enemies", "enemies",
                         "max_steps", "action_repeat", "move_period", "view_radius", "hud", "description"},
                        "scenario");
    ScenarioDef def;
    def.kind = scenario_kind_from_string(j.at("kind").get<std::string>());
    def.name = j.value("name", std::string(to_string(def.kind)));
    def.layout = j.at("layout").get<std::vector<std::string>>();

    std::map<char, nlohmann::json> legend;
    if (auto it = j.find("legend"); it != j.end()) {
      for (const auto& [key, value] : it->items()) {
        if (key.size() != 1 || key == "#" || key == "." || key == "S") {
          throw ConfigError("scenario: legend keys must be single characters other than '#', '.', 'S'");
        }
        reject_unknown_keys(value, {"item", "slot", "enemy"}, "legend entry");
        legend[key[0]] = value;
      }
    }
    for (int y = 0; y < def.height(); ++y) {
      const auto& row = def.layout[static_cast<std::size_t>(y)];
      for (int x = 0; x < static_cast<int>(row.size()); ++x) {
        const char c = row[static_cast<std::size_t>(x)];
        if (c == '#' || c == '.') continue;
        if (c == 'S') {
          def.spawn_points.push_back({x, y});
          continue;
        }
        auto it = legend.find(c);
        if (it == legend.end()) throw ConfigError(std::string("scenario: layout character '") + c + "' has no legend entry");
        const auto& entry = it->second;
        if (entry.contains("enemy")) {
          def.enemies.push_back({enemy_type_from_string(entry.at("enemy").get<std::string>()), {x, y}});
        } else {
          Item item;
          item.kind = item_kind_from_string(entry.at("item").get<std::string>());
          item.slot = entry.value("slot", -1);
          item.cell = {x, y};
          def.items.push_back(item);
        }
      }
    }
    // Non-wall legend cells are floor.
    for (auto& row : def.layout) {
      for (auto& c : row) {
        if (c != '#') c = '.';
      }
    }

    if (auto it = j.find("spawn"); it != j.end()) {
      reject_unknown_keys(*it, {"random_facing", "facing"}, "spawn");
      read_opt(*it, "random_facing", def.random_facing);
      if (it->contains("facing")) def.spawn_facing = facing_from_string(it->at("facing").get<std::string>());
    }
    if (auto it = j.find("agent"); it != j.end()) {
      reject_unknown_keys(*it, {"health", "weapons"}, "agent");
      read_opt(*it, "health", def.agent_health);
      if (auto w = it->find("weapons"); w != it->end()) {
        for (const auto& entry : *w) def.start_weapons.push_back({entry.at("slot").get<int>(), entry.value("ammo", 0)});
      }
    }
    read_opt(j, "can_attack", def.can_attack);
    if (auto it = j.find("events"); it != j.end()) {
      if (it->is_string()) {
        if (it->get<std::string>() != "doom26") throw ConfigError("scenario: events must be an array or \"doom26\"");
      } else {
        def.events = it->get<std::vector<std::string>>();
      }
    }
    if (auto it = j.find("rewards"); it != j.end()) {
      reject_unknown_keys(*it, {"living", "death", "goal", "kills", "scale"}, "rewards");
      read_opt(*it, "living", def.living_reward);
      read_opt(*it, "death", def.death_reward);
      read_opt(*it, "goal", def.goal_reward);
      read_opt(*it, "kills", def.kill_rewards);
      read_opt(*it, "scale", def.reward_scale);
    }
    if (auto it = j.find("acid"); it != j.end()) {
      reject_unknown_keys(*it, {"period", "damage"}, "acid");
      read_opt(*it, "period", def.acid_period);
      read_opt(*it, "damage", def.acid_damage);
    }
    if (auto it = j.find("medkits"); it != j.end()) {
      reject_unknown_keys(*it, {"count", "heal"}, "medkits");
      read_opt(*it, "count", def.medkit_count);
      read_opt(*it, "heal", def.medkit_heal);
    }
    read_opt(j, "armor_points", def.armor_points);
    read_opt(j, "item_respawn_delay", def.item_respawn_delay);
    if (auto it = j.find("random_enemies"); it != j.end()) {
      reject_unknown_keys(*it, {"count", "types", "weights", "respawn_delay", "min_spawn_distance"}, "random_enemies");
      read_opt(*it, "count", def.random_enemies.count);
      for (const auto& t : it->value("types", std::vector<std::string>{})) {
        def.random_enemies.types.push_back(enemy_type_from_string(t));
      }
      read_opt(*it, "weights", def.random_enemies.weights);
      read_opt(*it, "respawn_delay", def.random_enemies.respawn_delay);
      read_opt(*it, "min_spawn_distance", def.random_enemies.min_spawn_distance);
    }
    if (auto it = j.find("enemies"); it != j.end()) {
      reject_unknown_keys(*it, {"damage_scale", "chase_scale", "wake_distance"}, "enemies");
      read_opt(*it, "damage_scale", def.enemy_damage_scale);
      read_opt(*it, "chase_scale", def.enemy_chase_scale);
      read_opt(*it, "wake_distance", def.enemy_wake_distance);
    }
    read_opt(j, "max_steps", def.max_steps);
    read_opt(j, "action_repeat", def.action_repeat);
    read_opt(j, "move_period", def.move_period);
    read_opt(j, "view_radius", def.view_radius);
    read_opt(j, "hud", def.hud);
    read_opt(j, "description", def.description);
    def.validate();
    return def;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario: malformed JSON definition: ") + e.what());
  }
}

ScenarioDef load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("scenario: cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("scenario: " + path.string() + ": " + e.what());
  }
  return scenario_from_json(j);
}

ScenarioDef builtin_scenario(ScenarioKind kind) {
  return scenario_from_json(nlohmann::json::parse(builtin_scenario_json(kind)));
}

}  // namespace roe
