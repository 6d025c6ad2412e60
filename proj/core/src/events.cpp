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
#include "roe/events.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "roe/errors.hpp"

namespace roe {

EventTaxonomy::EventTaxonomy(std::vector<std::string> names) : names_(std::move(names)) {
  std::unordered_set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw ContractError("event taxonomy: empty event name");
    if (!seen.insert(n).second) throw ContractError("event taxonomy: duplicate event name '" + n + "'");
  }
}

std::optional<std::size_t> EventTaxonomy::find(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

std::size_t EventTaxonomy::index(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw ContractError("event taxonomy: unknown event '" + std::string(name) + "'");
}

EventTaxonomy EventTaxonomy::subset(const std::vector<std::string>& keep) const {
  for (const auto& k : keep) {
    if (!contains(k)) throw ConfigError("event taxonomy: '" + k + "' is not a known event");
  }
  std::vector<std::string> out;
  for (const auto& n : names_) {
    if (std::find(keep.begin(), keep.end(), n) != keep.end()) out.push_back(n);
  }
  return EventTaxonomy(std::move(out));
}

nlohmann::json EventTaxonomy::to_json() const { return names_; }

EventTaxonomy EventTaxonomy::from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ConfigError("event taxonomy: expected a JSON array of names");
  return EventTaxonomy(j.get<std::vector<std::string>>());
}

std::string pickup_weapon_event(int slot) { return "pickup_weapon_" + std::to_string(slot); }
std::string kill_weapon_event(int slot) { return "kill_weapon_" + std::to_string(slot); }

const EventTaxonomy& taxonomy_doom26() {
  static const EventTaxonomy taxonomy = [] {
    std::vector<std::string> names{"movement", "shoot", "pickup_medkit", "pickup_armor", "pickup_ammo"};
    for (int s = 0; s < 10; ++s) names.push_back(pickup_weapon_event(s));
    for (int s = 0; s < 10; ++s) names.push_back(kill_weapon_event(s));
    names.emplace_back("kill_any");
    return EventTaxonomy(std::move(names));
  }();
  return taxonomy;
}

std::uint64_t EventVector::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

bool EventVector::is_zero() const {
  return std::all_of(counts_.begin(), counts_.end(), [](Count c) { return c == 0; });
}

EventVector& EventVector::operator+=(const EventVector& other) {
  if (other.size() != size()) {
    throw ContractError("event vector: length mismatch (" + std::to_string(size()) + " vs " +
                        std::to_string(other.size()) + ")");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

EventVector EventVector::from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ConfigError("event vector: expected a JSON array");
  std::vector<Count> counts;
  counts.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      throw ConfigError("event vector: counts must be non-negative integers");
    }
    counts.push_back(v.get<Count>());
  }
  return EventVector(std::move(counts));
}

}  // namespace roe
