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
#include "roe/rarity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "roe/errors.hpp"

namespace roe {

void RoEConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("roe: tau must be a positive finite number");
  if (buffer_capacity < 1) throw ConfigError("roe: buffer_capacity must be at least 1");
}

EventBuffer::EventBuffer(EventTaxonomy taxonomy, std::size_t capacity)
    : taxonomy_(std::move(taxonomy)),
      capacity_(capacity),
      column_totals_(taxonomy_.size(), 0),
      mean_(taxonomy_.size(), 0.0) {
  if (capacity_ < 1) throw ConfigError("event buffer: capacity must be at least 1");
}

void EventBuffer::push_episode(const EventVector& episode) {
  if (episode.size() != taxonomy_.size()) {
    throw ContractError("event buffer: episode has " + std::to_string(episode.size()) +
                        " events, taxonomy has " + std::to_string(taxonomy_.size()));
  }
  records_.push_back(episode);
  for (std::size_t i = 0; i < episode.size(); ++i) column_totals_[i] += episode[i];
  if (records_.size() > capacity_) {
    const EventVector& oldest = records_.front();
    for (std::size_t i = 0; i < oldest.size(); ++i) column_totals_[i] -= oldest[i];
    records_.pop_front();
  }
  refresh_mean();
}

void EventBuffer::refresh_mean() {
  const auto n = static_cast<double>(records_.size());
  for (std::size_t i = 0; i < mean_.size(); ++i) {
    mean_[i] = records_.empty() ? 0.0 : static_cast<double>(column_totals_[i]) / n;
  }
}

nlohmann::json EventBuffer::to_json() const {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : records_) recs.push_back(r.to_json());
  return {{"capacity", capacity_}, {"taxonomy", taxonomy_.to_json()}, {"records", recs}};
}

EventBuffer EventBuffer::from_json(const nlohmann::json& j) {
  try {
    EventBuffer buffer(EventTaxonomy::from_json(j.at("taxonomy")), j.at("capacity").get<std::size_t>());
    for (const auto& r : j.at("records")) buffer.push_episode(EventVector::from_json(r));
    return buffer;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("event buffer: malformed dump: ") + e.what());
  }
}

double rarity_reward(const EventVector& x, std::span<const double> mean, double tau) {
  if (x.size() != mean.size()) {
    throw ContractError("rarity_reward: event vector and mean differ in length");
  }
  if (!(tau > 0.0)) throw ContractError("rarity_reward: tau must be positive");
  double reward = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0) continue;
    reward += static_cast<double>(x[i]) / std::max(mean[i], tau);
  }
  return reward;
}

}  // namespace roe
