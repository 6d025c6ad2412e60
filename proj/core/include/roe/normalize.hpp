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

#include <string_view>

namespace roe {

enum class NormalizationMode {
  affine01,   // [-100, 100] -> [0, 1]
  symmetric,  // [-100, 100] -> [-1, 1]
};

std::string_view to_string(NormalizationMode mode);
NormalizationMode normalization_mode_from_string(std::string_view name);

/// Maps a raw extrinsic reward in [-100, 100] to the learner's scale.
/// Values outside the declared range throw ContractError.
double normalize_extrinsic(double raw, NormalizationMode mode = NormalizationMode::affine01);

}  // namespace roe
