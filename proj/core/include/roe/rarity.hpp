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
#include <deque>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "roe/events.hpp"

namespace roe {

struct RoEConfig {
  double tau = 0.01;
  std::size_t buffer_capacity = 100;

  void validate() const;
};

/// FIFO window over the event vectors of the last `capacity` finished episodes.
///
/// The temporal mean is kept in sync on every push. Column totals are
/// integers, so the cached mean is the correctly rounded quotient and matches
/// a from-scratch recomputation bit for bit.
class EventBuffer {
 public:
  EventBuffer(EventTaxonomy taxonomy, std::size_t capacity);

  void push_episode(const EventVector& episode);

  /// Snapshot copy of the episodic mean occurrence; zeros when empty.
  std::vector<double> temporal_mean() const { return mean_; }

  const std::deque<EventVector>& records() const { return records_; }
  const EventTaxonomy& taxonomy() const { return taxonomy_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  /// {capacity, taxonomy, records: [[ints]]}
  nlohmann::json to_json() const;
  static EventBuffer from_json(const nlohmann::json& j);

 private:
  void refresh_mean();

  EventTaxonomy taxonomy_;
  std::size_t capacity_;
  std::deque<EventVector> records_;
  std::vector<std::uint64_t> column_totals_;
  std::vector<double> mean_;
};

/// Sum over events of x_i / max(mean_i, tau).
double rarity_reward(const EventVector& x, std::span<const double> mean, double tau);

/// Rarity reward of a whole-episode vector. Identical to rarity_reward by
/// linearity; kept as a separate name for episode-level bookkeeping.
inline double episode_reward_total(const EventVector& episode, std::span<const double> mean,
                                   double tau) {
  return rarity_reward(episode, mean, tau);
}

}  // namespace roe
