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
#include "roe/gridenv.hpp"

#include <algorithm>
#include <cmath>

#include "roe/errors.hpp"

namespace roe {

namespace {

constexpr std::array<Cell, 4> kDirections{{{0, -1}, {1, 0}, {0, 1}, {-1, 0}}};

Cell ahead(Cell c, Facing f) {
  const Cell d = kDirections[static_cast<std::size_t>(f)];
  return {c.x + d.x, c.y + d.y};
}

double distance(Cell a, Cell b) { return std::hypot(static_cast<double>(a.x - b.x), static_cast<double>(a.y - b.y)); }

Facing turned(Facing f, int quarter_turns) { return static_cast<Facing>((static_cast<int>(f) + quarter_turns + 4) % 4); }

void add_diff(EventVector& out, const EventTaxonomy& taxonomy, const char* name, std::uint32_t before,
              std::uint32_t after) {
  if (after <= before) return;
  if (auto i = taxonomy.find(name)) out.add(*i, after - before);
}

}  // namespace

// ---------------------------------------------------------------------------

GridEnvConfig GridEnvConfig::from_scenario(ScenarioDef def, std::uint64_t seed) {
  GridEnvConfig config;
  config.max_steps = def.max_steps;
  config.action_repeat = def.action_repeat;
  config.scenario = std::move(def);
  config.seed = seed;
  return config;
}

void GridEnvConfig::validate() const {
  scenario.validate();
  if (max_steps < 1) throw ConfigError("grid env: max_steps must be >= 1");
  if (action_repeat < 1) throw ConfigError("grid env: action_repeat must be >= 1");
  if (variant && scenario.kind != ScenarioKind::deathmatch) {
    throw ConfigError("grid env: weapon variants exist only for deathmatch");
  }
}

GridEnvConfig make_variant(const GridEnvConfig& base, int weapon_slot) {
  if (base.scenario.kind != ScenarioKind::deathmatch) {
    throw ConfigError("make_variant: base scenario must be deathmatch, got " + std::string(to_string(base.scenario.kind)));
  }
  if (base.variant) throw ConfigError("make_variant: base is already a single-weapon variant");
  (void)variant_name(weapon_slot);  // validates the slot

  GridEnvConfig out = base;
  auto& items = out.scenario.items;
  std::erase_if(items, [&](const Item& it) {
    return (it.kind == ItemKind::weapon || it.kind == ItemKind::ammo) && it.slot != weapon_slot;
  });
  out.scenario.name = base.scenario.name + "_" + std::string(variant_name(weapon_slot));
  out.variant = weapon_slot;
  return out;
}

// ---------------------------------------------------------------------------

EventVector detect_events(const EnvState& prev, const EnvState& next, const EventTaxonomy& taxonomy) {
  EventVector out(taxonomy.size());
  const EventTotals& a = prev.totals;
  const EventTotals& b = next.totals;
  add_diff(out, taxonomy, "movement", a.movement, b.movement);
  add_diff(out, taxonomy, "shoot", a.shots, b.shots);
  add_diff(out, taxonomy, "pickup_medkit", a.medkits, b.medkits);
  add_diff(out, taxonomy, "pickup_armor", a.armor, b.armor);
  add_diff(out, taxonomy, "pickup_ammo", a.ammo, b.ammo);
  std::uint32_t kills_before = 0;
  std::uint32_t kills_after = 0;
  for (int s = 0; s < kWeaponSlots; ++s) {
    const auto i = static_cast<std::size_t>(s);
    add_diff(out, taxonomy, pickup_weapon_event(s).c_str(), a.weapon_pickups[i], b.weapon_pickups[i]);
    add_diff(out, taxonomy, kill_weapon_event(s).c_str(), a.kills[i], b.kills[i]);
    kills_before += a.kills[i];
    kills_after += b.kills[i];
  }
  add_diff(out, taxonomy, "kill_any", kills_before, kills_after);
  return out;
}

// ---------------------------------------------------------------------------

GridEnv::GridEnv(GridEnvConfig config) : config_(std::move(config)) {
  config_.validate();
  taxonomy_ = config_.scenario.taxonomy();
  reset();
}

ObservationShape GridEnv::observation_shape() const {
  const int r = config_.scenario.view_radius;
  if (r > 0) return {kObservationChannels, 2 * r + 1, 2 * r + 1};
  return {kObservationChannels, config_.scenario.height(), config_.scenario.width()};
}

Observation GridEnv::reset() { return reset(config_.seed); }

Observation GridEnv::reset(std::uint64_t seed) {
  const ScenarioDef& def = config_.scenario;
  state_ = EnvState{};
  state_.rng.seed(seed);

  const auto spawn_index = uniform_index(state_.rng, def.spawn_points.size());
  state_.agent = def.spawn_points[spawn_index];
  state_.facing = def.random_facing ? static_cast<Facing>(uniform_index(state_.rng, 4)) : def.spawn_facing;
  state_.movement_anchor = state_.agent;
  state_.health = def.agent_health;

  state_.owned[0] = true;  // fist
  for (const auto& w : def.start_weapons) {
    state_.owned[static_cast<std::size_t>(w.slot)] = true;
    state_.ammo[static_cast<std::size_t>(w.slot)] = w.ammo;
  }
  select_best_weapon();

  state_.items = def.items;
  state_.totals.items_spawned = static_cast<std::uint32_t>(def.items.size());
  for (const auto& placement : def.enemies) {
    state_.enemies.push_back(
        {placement.type, placement.cell, enemy_spec(placement.type).hit_points, 0, def.enemy_wake_distance <= 0.0});
  }
  maintain_spawns();
  return observe();
}

StepResult GridEnv::step(int action) {
  if (state_.done) throw ContractError("grid env: step() called on a finished episode; call reset()");
  if (action < 0 || action >= action_count()) {
    throw ContractError("grid env: action " + std::to_string(action) + " outside [0, " +
                        std::to_string(action_count()) + ")");
  }
  const EnvState before = state_;
  StepResult result;
  double reward = 0.0;
  for (int t = 0; t < config_.action_repeat && !state_.done; ++t) {
    tick_reward_ = 0.0;
    tick(action, t);
    reward += tick_reward_;
    ++result.ticks;
  }
  state_.episode_extrinsic += reward;
  result.extrinsic_reward = reward;
  result.events = detect_events(before, state_, taxonomy_);
  result.done = state_.done;
  result.position = state_.agent;
  result.observation = observe();
  return result;
}

void GridEnv::tick(int action, int sub_tick) {
  const ScenarioDef& def = config_.scenario;
  EnvState& s = state_;

  // Turning happens once per decision so a repeated quarter turn does not spin in place.
  if (sub_tick == 0) {
    const bool left = (action & kTurnLeft) != 0;
    const bool right = (action & kTurnRight) != 0;
    if (left != right) s.facing = turned(s.facing, left ? -1 : 1);
  }

  if (s.cooldown > 0) --s.cooldown;
  if ((action & kAttack) != 0 && def.can_attack) fire_weapon();

  if ((action & kForward) != 0 && sub_tick % def.move_period == 0) {
    const Cell next = ahead(s.agent, s.facing);
    if (cell_free(next, true)) s.agent = next;
  }
  // One movement event per unit travelled from the last anchor.
  if (distance(s.agent, s.movement_anchor) >= 1.0) {
    ++s.totals.movement;
    s.movement_anchor = s.agent;
  }

  pick_up_items();
  if (s.goal_reached) {
    tick_reward_ += def.goal_reward;
    s.done = true;
    ++s.tick;
    return;
  }

  enemies_act();
  if (def.acid_period > 0 && (s.tick + 1) % def.acid_period == 0) damage_agent(def.acid_damage);

  ++s.tick;
  if (s.health <= 0) {
    s.health = 0;
    s.dead = true;
    s.done = true;
    tick_reward_ += def.death_reward;
    return;
  }
  tick_reward_ += def.living_reward;
  maintain_spawns();
  if (s.tick >= config_.max_steps) s.done = true;
}

void GridEnv::select_best_weapon() {
  // Prefer the strongest owned weapon that can fire.
  static constexpr std::array<int, 7> kPreference{6, 5, 4, 3, 2, 1, 0};
  for (int slot : kPreference) {
    const auto i = static_cast<std::size_t>(slot);
    if (state_.owned[i] && (!weapon_spec(slot).uses_ammo || state_.ammo[i] > 0)) {
      state_.weapon = slot;
      return;
    }
  }
  state_.weapon = 0;
}

void GridEnv::fire_weapon() {
  EnvState& s = state_;
  if (s.cooldown > 0) return;
  const WeaponSpec& w = weapon_spec(s.weapon);
  const auto slot = static_cast<std::size_t>(s.weapon);
  if (w.uses_ammo) {
    if (s.ammo[slot] <= 0) {
      select_best_weapon();
      return;
    }
    --s.ammo[slot];
    ++s.totals.shots;
  }
  s.cooldown = w.cooldown;

  Cell c = s.agent;
  Cell impact = c;
  std::optional<std::size_t> hit;
  for (int r = 0; r < w.range; ++r) {
    const Cell next = ahead(c, s.facing);
    if (config_.scenario.is_wall(next)) break;
    c = next;
    impact = c;
    for (std::size_t e = 0; e < s.enemies.size(); ++e) {
      if (s.enemies[e].alive() && s.enemies[e].cell == c) hit = e;
    }
    if (hit) break;
  }
  if (hit) damage_enemy(*hit, w.damage);
  if (w.splash_damage > 0 && impact != s.agent) {
    for (std::size_t e = 0; e < s.enemies.size(); ++e) {
      if (hit && e == *hit) continue;
      const Enemy& en = s.enemies[e];
      if (en.alive() && std::abs(en.cell.x - impact.x) <= 1 && std::abs(en.cell.y - impact.y) <= 1) {
        damage_enemy(e, w.splash_damage);
      }
    }
  }
  if (w.uses_ammo && s.ammo[slot] == 0) select_best_weapon();
}

void GridEnv::damage_enemy(std::size_t index, int damage) {
  EnvState& s = state_;
  Enemy& e = s.enemies[index];
  if (!e.alive()) return;
  e.hp -= damage;
  e.awake = true;
  if (e.alive()) return;
  e.hp = 0;
  ++s.totals.kills[static_cast<std::size_t>(s.weapon)];
  if (config_.scenario.kill_rewards) tick_reward_ += kill_reward(e.type);
  e.respawn_timer = config_.scenario.random_enemies.respawn_delay;
}

void GridEnv::damage_agent(int amount) {
  EnvState& s = state_;
  if (amount <= 0) return;
  if (s.armor > 0) {
    const int absorbed = std::min(s.armor, amount / 2);
    s.armor -= absorbed;
    amount -= absorbed;
  }
  s.health -= amount;
}

void GridEnv::enemies_act() {
  EnvState& s = state_;
  const ScenarioDef& def = config_.scenario;
  for (auto& e : s.enemies) {
    if (!e.alive()) continue;
    const EnemySpec& spec = enemy_spec(e.type);
    const double d = distance(e.cell, s.agent);
    if (!e.awake) {
      if (d > def.enemy_wake_distance) continue;
      e.awake = true;
    }
    const bool visible = line_of_sight(e.cell, s.agent);
    if (visible && d <= spec.attack_range) {
      if (bernoulli(s.rng, spec.attack_prob)) {
        damage_agent(static_cast<int>(std::lround(spec.damage * def.enemy_damage_scale)));
      }
      continue;
    }
    if (!bernoulli(s.rng, spec.chase_prob * def.enemy_chase_scale)) continue;
    // Greedy chase: close the larger axis gap first, fall back to the other axis.
    const int dx = s.agent.x - e.cell.x;
    const int dy = s.agent.y - e.cell.y;
    const Cell step_x{e.cell.x + (dx > 0) - (dx < 0), e.cell.y};
    const Cell step_y{e.cell.x, e.cell.y + (dy > 0) - (dy < 0)};
    const std::array<Cell, 2> order = std::abs(dx) >= std::abs(dy) ? std::array{step_x, step_y}
                                                                  : std::array{step_y, step_x};
    for (const Cell& c : order) {
      if (c != e.cell && cell_free(c, true)) {
        e.cell = c;
        break;
      }
    }
  }
}

void GridEnv::pick_up_items() {
  EnvState& s = state_;
  const ScenarioDef& def = config_.scenario;
  for (std::size_t i = 0; i < s.items.size();) {
    const Item it = s.items[i];
    if (it.cell != s.agent) {
      ++i;
      continue;
    }
    const auto slot = static_cast<std::size_t>(std::max(it.slot, 0));
    switch (it.kind) {
      case ItemKind::medkit:
        s.health = std::min(def.agent_health, s.health + def.medkit_heal);
        ++s.totals.medkits;
        break;
      case ItemKind::armor:
        s.armor = std::max(s.armor, def.armor_points);
        ++s.totals.armor;
        break;
      case ItemKind::goal_armor:
        ++s.totals.armor;
        s.goal_reached = true;
        break;
      case ItemKind::ammo:
        s.ammo[slot] = std::min(weapon_spec(it.slot).max_ammo, s.ammo[slot] + weapon_spec(it.slot).ammo_pack);
        ++s.totals.ammo;
        if (s.owned[slot] && s.weapon < it.slot) select_best_weapon();
        break;
      case ItemKind::weapon:
        s.owned[slot] = true;
        s.ammo[slot] = std::min(weapon_spec(it.slot).max_ammo, s.ammo[slot] + weapon_spec(it.slot).ammo_on_pickup);
        s.weapon = it.slot;
        ++s.totals.weapon_pickups[slot];
        break;
    }
    s.items.erase(s.items.begin() + static_cast<std::ptrdiff_t>(i));
    const bool fixed = std::find(def.items.begin(), def.items.end(), it) != def.items.end();
    if (fixed && def.item_respawn_delay > 0) s.pending_items.emplace_back(it, def.item_respawn_delay);
  }
}

void GridEnv::maintain_spawns() {
  EnvState& s = state_;
  const ScenarioDef& def = config_.scenario;

  for (auto& [item, timer] : s.pending_items) {
    if (timer > 0) --timer;
  }
  for (std::size_t i = 0; i < s.pending_items.size();) {
    auto& [item, timer] = s.pending_items[i];
    if (timer == 0 && item.cell != s.agent) {
      s.items.push_back(item);
      ++s.totals.items_spawned;
      s.pending_items.erase(s.pending_items.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ++i;
    }
  }

  auto medkits = std::count_if(s.items.begin(), s.items.end(), [](const Item& it) { return it.kind == ItemKind::medkit; });
  const auto fixed_medkits = std::count_if(def.items.begin(), def.items.end(), [](const Item& it) { return it.kind == ItemKind::medkit; });
  for (; medkits < def.medkit_count + fixed_medkits; ++medkits) {
    auto cell = random_free_cell(1.0);
    if (!cell) break;
    s.items.push_back({ItemKind::medkit, -1, *cell});
    ++s.totals.items_spawned;
  }

  const RandomEnemies& re = def.random_enemies;
  if (re.count <= 0) return;
  const auto fixed_enemies = static_cast<std::ptrdiff_t>(def.enemies.size());
  // Dead random enemies count down, then respawn somewhere away from the agent.
  for (auto& e : s.enemies) {
    if (e.alive() || re.respawn_delay <= 0) continue;
    if (e.respawn_timer > 0) --e.respawn_timer;
  }
  auto spawn_type = [&]() {
    if (re.weights.empty()) return re.types[uniform_index(s.rng, re.types.size())];
    double total = 0.0;
    for (double w : re.weights) total += w;
    double u = uniform01(s.rng) * total;
    for (std::size_t i = 0; i < re.types.size(); ++i) {
      u -= re.weights[i];
      if (u < 0.0) return re.types[i];
    }
    return re.types.back();
  };
  for (std::size_t i = static_cast<std::size_t>(fixed_enemies); i < s.enemies.size(); ++i) {
    Enemy& e = s.enemies[i];
    if (e.alive() || re.respawn_delay <= 0 || e.respawn_timer > 0) continue;
    if (auto cell = random_free_cell(re.min_spawn_distance)) {
      e.type = spawn_type();
      e.cell = *cell;
      e.hp = enemy_spec(e.type).hit_points;
      e.awake = def.enemy_wake_distance <= 0.0;
    }
  }
  while (static_cast<std::ptrdiff_t>(s.enemies.size()) - fixed_enemies < re.count) {
    auto cell = random_free_cell(re.min_spawn_distance);
    if (!cell) break;
    const EnemyType type = spawn_type();
    s.enemies.push_back({type, *cell, enemy_spec(type).hit_points, 0, def.enemy_wake_distance <= 0.0});
  }
}

bool GridEnv::cell_free(Cell c, bool allow_items) const {
  if (config_.scenario.is_wall(c) || c == state_.agent) return false;
  for (const auto& e : state_.enemies) {
    if (e.alive() && e.cell == c) return false;
  }
  if (!allow_items) {
    for (const auto& it : state_.items) {
      if (it.cell == c) return false;
    }
  }
  return true;
}

std::optional<Cell> GridEnv::random_free_cell(double min_distance_from_agent) {
  const ScenarioDef& def = config_.scenario;
  std::vector<Cell> candidates;
  for (int y = 0; y < def.height(); ++y) {
    for (int x = 0; x < def.width(); ++x) {
      const Cell c{x, y};
      if (!cell_free(c, false) || distance(c, state_.agent) < min_distance_from_agent) continue;
      candidates.push_back(c);
    }
  }
  if (candidates.empty()) return std::nullopt;
  return candidates[uniform_index(state_.rng, candidates.size())];
}

bool GridEnv::line_of_sight(Cell a, Cell b) const {
  // Sight runs along rows and columns only, the same rule the agent's weapons use.
  if (a.x != b.x && a.y != b.y) return false;
  const int sx = (b.x > a.x) - (b.x < a.x);
  const int sy = (b.y > a.y) - (b.y < a.y);
  for (Cell c{a.x + sx, a.y + sy}; c != b; c = {c.x + sx, c.y + sy}) {
    if (config_.scenario.is_wall(c)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

Observation GridEnv::observe() const {
  Observation obs;
  obs.shape = observation_shape();
  obs.data.assign(static_cast<std::size_t>(obs.shape.size()), 0.0);
  observe_into(obs.data);
  return obs;
}

void GridEnv::observe_into(std::span<double> out) const {
  if (out.size() != static_cast<std::size_t>(observation_shape().size())) {
    throw ContractError("grid env: observation buffer has wrong size");
  }
  const int r = config_.scenario.view_radius;
  if (r == 0) {
    observe_map(out);
    return;
  }
  // Render the whole map, then sample the window: window row i, column j
  // lies (r - i) cells ahead of the agent and (j - r) cells to its right.
  const int w = config_.scenario.width();
  const int h = config_.scenario.height();
  const auto map_plane = static_cast<std::size_t>(w * h);
  thread_local std::vector<double> map;
  map.resize(map_plane * kObservationChannels);
  observe_map(map);
  const int side = 2 * r + 1;
  const auto plane = static_cast<std::size_t>(side * side);
  const Cell fwd = kDirections[static_cast<std::size_t>(state_.facing)];
  const Cell right = kDirections[static_cast<std::size_t>(turned(state_.facing, 1))];
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) {
      const int a = r - i;
      const int b = j - r;
      const Cell c{state_.agent.x + a * fwd.x + b * right.x, state_.agent.y + a * fwd.y + b * right.y};
      const auto o = static_cast<std::size_t>(i * side + j);
      const bool inside = config_.scenario.in_bounds(c);
      const auto m = inside ? static_cast<std::size_t>(c.y * w + c.x) : 0;
      for (int ch = 0; ch < kObservationChannels; ++ch) {
        const auto k = static_cast<std::size_t>(ch);
        double v = 0.0;
        if (ch >= 10) {
          v = map[k * map_plane];  // scalar planes are constant
        } else if (ch == 0) {
          v = inside ? map[m] : 1.0;
        } else if (ch <= 4) {
          v = (i == r && j == r && ch == 1) ? 1.0 : 0.0;  // the agent always faces up
        } else if (inside) {
          v = map[k * map_plane + m];
        }
        out[k * plane + o] = v;
      }
    }
  }
}

void GridEnv::observe_map(std::span<double> out) const {
  const ScenarioDef& def = config_.scenario;
  const int w = def.width();
  const int h = def.height();
  const auto plane = static_cast<std::size_t>(w * h);
  std::fill(out.begin(), out.end(), 0.0);
  auto at = [&](int channel, Cell c) -> double& {
    return out[static_cast<std::size_t>(channel) * plane + static_cast<std::size_t>(c.y * w + c.x)];
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (def.is_wall({x, y})) at(0, {x, y}) = 1.0;
    }
  }
  const EnvState& s = state_;
  at(1 + static_cast<int>(s.facing), s.agent) = 1.0;
  for (const auto& it : s.items) {
    switch (it.kind) {
      case ItemKind::medkit: at(5, it.cell) = 1.0; break;
      case ItemKind::armor:
      case ItemKind::goal_armor: at(6, it.cell) = 1.0; break;
      case ItemKind::weapon: at(7, it.cell) = (it.slot + 1) / 10.0; break;
      case ItemKind::ammo: at(8, it.cell) = (it.slot + 1) / 10.0; break;
    }
  }
  for (const auto& e : s.enemies) {
    if (e.alive()) at(9, e.cell) = std::clamp(static_cast<double>(e.hp) / enemy_spec(e.type).hit_points, 0.0, 1.0);
  }
  if (!def.hud) return;
  const double health = std::clamp(static_cast<double>(s.health) / def.agent_health, 0.0, 1.0);
  const WeaponSpec& weapon = weapon_spec(s.weapon);
  const double ammo =
      weapon.uses_ammo && weapon.max_ammo > 0
          ? std::clamp(static_cast<double>(s.ammo[static_cast<std::size_t>(s.weapon)]) / weapon.max_ammo, 0.0, 1.0)
          : 1.0;
  const double weapon_code = (s.weapon + 1) / 10.0;
  std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(10 * plane), plane, health);
  std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(11 * plane), plane, ammo);
  std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(12 * plane), plane, weapon_code);
}

// ---------------------------------------------------------------------------

nlohmann::json EnvState::to_json() const {
  auto cell = [](Cell c) { return nlohmann::json::array({c.x, c.y}); };
  auto item = [&](const Item& it) {
    return nlohmann::json{{"kind", static_cast<int>(it.kind)}, {"slot", it.slot}, {"cell", cell(it.cell)}};
  };
  nlohmann::json j;
  j["agent"] = cell(agent);
  j["facing"] = static_cast<int>(facing);
  j["anchor"] = cell(movement_anchor);
  j["health"] = health;
  j["armor"] = armor;
  j["owned"] = owned;
  j["ammo"] = ammo;
  j["weapon"] = weapon;
  j["cooldown"] = cooldown;
  j["items"] = nlohmann::json::array();
  for (const auto& it : items) j["items"].push_back(item(it));
  j["pending_items"] = nlohmann::json::array();
  for (const auto& [it, t] : pending_items) j["pending_items"].push_back({item(it), t});
  j["enemies"] = nlohmann::json::array();
  for (const auto& e : enemies) {
    j["enemies"].push_back({static_cast<int>(e.type), cell(e.cell), e.hp, e.respawn_timer, e.awake});
  }
  j["tick"] = tick;
  j["done"] = done;
  j["dead"] = dead;
  j["goal_reached"] = goal_reached;
  j["episode_extrinsic"] = episode_extrinsic;
  j["totals"] = {totals.movement, totals.shots,          totals.medkits, totals.armor,
                 totals.ammo,     totals.weapon_pickups, totals.kills,   totals.items_spawned};
  j["rng"] = rng_to_string(rng);
  return j;
}

EnvState EnvState::from_json(const nlohmann::json& j) {
  auto cell = [](const nlohmann::json& c) { return Cell{c.at(0).get<int>(), c.at(1).get<int>()}; };
  auto item = [&](const nlohmann::json& i) {
    return Item{static_cast<ItemKind>(i.at("kind").get<int>()), i.at("slot").get<int>(), cell(i.at("cell"))};
  };
  try {
    EnvState s;
    s.agent = cell(j.at("agent"));
    s.facing = static_cast<Facing>(j.at("facing").get<int>());
    s.movement_anchor = cell(j.at("anchor"));
    s.health = j.at("health").get<int>();
    s.armor = j.at("armor").get<int>();
    s.owned = j.at("owned").get<std::array<bool, kWeaponSlots>>();
    s.ammo = j.at("ammo").get<std::array<int, kWeaponSlots>>();
    s.weapon = j.at("weapon").get<int>();
    s.cooldown = j.at("cooldown").get<int>();
    for (const auto& it : j.at("items")) s.items.push_back(item(it));
    for (const auto& p : j.at("pending_items")) s.pending_items.emplace_back(item(p.at(0)), p.at(1).get<int>());
    for (const auto& e : j.at("enemies")) {
      s.enemies.push_back({static_cast<EnemyType>(e.at(0).get<int>()), cell(e.at(1)), e.at(2).get<int>(), e.at(3).get<int>(),
                           e.at(4).get<bool>()});
    }
    s.tick = j.at("tick").get<int>();
    s.done = j.at("done").get<bool>();
    s.dead = j.at("dead").get<bool>();
    s.goal_reached = j.at("goal_reached").get<bool>();
    s.episode_extrinsic = j.at("episode_extrinsic").get<double>();
    const auto& t = j.at("totals");
    s.totals.movement = t.at(0).get<std::uint32_t>();
    s.totals.shots = t.at(1).get<std::uint32_t>();
    s.totals.medkits = t.at(2).get<std::uint32_t>();
    s.totals.armor = t.at(3).get<std::uint32_t>();
    s.totals.ammo = t.at(4).get<std::uint32_t>();
    s.totals.weapon_pickups = t.at(5).get<std::array<std::uint32_t, kWeaponSlots>>();
    s.totals.kills = t.at(6).get<std::array<std::uint32_t, kWeaponSlots>>();
    s.totals.items_spawned = t.at(7).get<std::uint32_t>();
    s.rng = rng_from_string(j.at("rng").get<std::string>());
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("env state: malformed JSON: ") + e.what());
  }
}

}  // namespace roe
