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

#include <filesystem>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

namespace roe {

/// Binary checkpoint container.
///
/// Layout (little-endian):
///   8 bytes  magic "ROECKPT\0"
///   u32      format version (kCheckpointVersion)
///   u64      metadata length, then UTF-8 JSON metadata
///   u64      parameter count, then that many f64 parameters
///   u64      optimizer-state count, then that many f64 values
///
/// The metadata carries the network config, event-buffer dump, RNG states,
/// trainer state and step counter; see harness.cpp for its keys.
struct Checkpoint {
  nlohmann::json meta;
  Eigen::VectorXd parameters;
  Eigen::VectorXd optimizer_state;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Writes through a temporary file and renames it into place.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace roe
