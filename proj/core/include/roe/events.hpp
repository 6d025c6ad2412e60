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

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace roe {

/// Ordered set of unique event names. Indices are stable for the lifetime
/// of the taxonomy and are the coordinates of every EventVector built on it.
class EventTaxonomy {
 public:
  EventTaxonomy() = default;
  explicit EventTaxonomy(std::vector<std::string> names);

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(std::size_t i) const { return names_.at(i); }

  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws ContractError for unknown names.
  std::size_t index(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name).has_value(); }

  /// Keeps the listed names, in this taxonomy's order. Unknown names throw ConfigError.
  EventTaxonomy subset(const std::vector<std::string>& keep) const;

  nlohmann::json to_json() const;
  static EventTaxonomy from_json(const nlohmann::json& j);

  friend bool operator==(const EventTaxonomy&, const EventTaxonomy&) = default;

 private:
  std::vector<std::string> names_;
};

/// The 26-event Doom-style taxonomy, in its fixed order:
/// movement, shoot, pickup_medkit, pickup_armor, pickup_ammo,
/// pickup_weapon_0..9, kill_weapon_0..9, kill_any.
const EventTaxonomy& taxonomy_doom26();

std::string pickup_weapon_event(int slot);
std::string kill_weapon_event(int slot);

/// Non-negative occurrence counts, one per taxonomy entry.
class EventVector {
 public:
  using Count = std::uint32_t;

  EventVector() = default;
  explicit EventVector(std::size_t size) : counts_(size, 0) {}
  EventVector(std::initializer_list<Count> counts) : counts_(counts) {}
  explicit EventVector(std::vector<Count> counts) : counts_(std::move(counts)) {}

  std::size_t size() const { return counts_.size(); }
  Count operator[](std::size_t i) const { return counts_[i]; }
  std::span<const Count> counts() const { return counts_; }

  void add(std::size_t i, Count n = 1) { counts_.at(i) += n; }
  std::uint64_t total() const;
  bool is_zero() const;

  /// Elementwise sum; length mismatch throws ContractError.
  EventVector& operator+=(const EventVector& other);
  friend EventVector operator+(EventVector a, const EventVector& b) { return a += b; }
  friend bool operator==(const EventVector&, const EventVector&) = default;

  nlohmann::json to_json() const { return counts_; }
  static EventVector from_json(const nlohmann::json& j);

 private:
  std::vector<Count> counts_;
};

inline EventVector ev_add(const EventVector& a, const EventVector& b) { return a + b; }

}  // namespace roe
