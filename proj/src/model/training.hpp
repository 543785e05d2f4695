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
#include <functional>
#include <span>
#include <string>
#include <string_view>

#include "json.hpp"
#include "model/dataset.hpp"
#include "model/h2rat.hpp"

namespace h2r::model {

struct TrainOptions {
  int epochs = 10;
  double lr = 1e-3;
  int batch = 32;
  std::uint64_t seed = 0;
  /// Weight of the attention-supervision term; 0 trains the three heads only.
  double attention_weight = 1.0;
};

/// Training-pass statistics for one epoch.
struct EpochReport {
  int epoch = 0;  // 1-based
  double loss = 0.0;
  double attention_acc = 0.0;
  double region_acc = 0.0;
  double error_type_acc = 0.0;
  double action_acc = 0.0;
};

using EpochCallback = std::function<void(const EpochReport&)>;

/// Adam over mini-batches of the mean per-sample loss. The sample order is
/// reshuffled every epoch from Rng(mix(seed, 1)). Single-threaded and
/// bit-deterministic. EmptyDataset for an empty dataset.
void train(H2RatModel& model, std::span<const Sample> data, const TrainOptions& options,
           const EpochCallback& on_epoch = {});

struct Metrics {
  std::size_t n = 0;
  double attention_transfer_acc = 0.0;
  double top_action_prob = 0.0;
  double failure_avoidance_sim = 0.0;
  double failure_avoidance_product = 0.0;
  double error_type_acc = 0.0;
  double action_acc = 0.0;
};

/// With `oracle` set, the simulated correction uses the truth action and
/// region instead of the recommendation. EmptyDataset for an empty dataset.
Metrics evaluate(const H2RatModel& model, std::span<const Sample> data, bool oracle = false);

nlohmann::ordered_json metrics_to_json(const Metrics& metrics, std::string_view checkpoint_hash);

/// Model checkpoint text (neural-core format) with the vocabulary hash.
std::string save_checkpoint(const H2RatModel& model, std::string_view vocab_hash,
                            std::uint64_t seed, int epoch);

/// CheckpointMismatch when the stored vocabulary hash differs from
/// `expected_vocab_hash` or the tensors do not fit the stored config.
H2RatModel load_checkpoint(std::string_view text, std::string_view expected_vocab_hash);

/// FNV-1a of the checkpoint text, 16 hex digits.
std::string checkpoint_hash(std::string_view text);

}  // namespace h2r::model
