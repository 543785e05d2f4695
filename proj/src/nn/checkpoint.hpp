// Copyright 2026 The h2rat Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include "json.hpp"
#include "nn/layers.hpp"

namespace h2r::nn {

struct CheckpointMetadata {
  std::string vocab_hash;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::uint64_t seed = 0;
  int epoch = 0;
};

struct Checkpoint {
  CheckpointMetadata metadata;
  std::map<std::string, Tensor> tensors;
};

/// JSON document:
///   {"metadata": {"vocab_hash", "config", "seed", "epoch"},
///    "parameters": {name: {"shape": [...], "data": [...]}, ...}}
/// Parameters keep the order given; doubles use shortest round-trip decimals.
std::string serialize_checkpoint(std::span<const Parameter* const> params,
                                 const CheckpointMetadata& metadata);

/// Throws MalformedData on any structural problem.
Checkpoint parse_checkpoint(std::string_view text);

/// Copies checkpoint tensors into params by name. A missing name, an extra
/// name or a shape difference throws CheckpointMismatch.
void restore_parameters(const Checkpoint& checkpoint,
                        std::span<Parameter* const> params);

}  // namespace h2r::nn
