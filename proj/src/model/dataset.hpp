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
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "nn/tensor.hpp"
#include "sim/scene.hpp"

namespace h2r::model {

/// One trial as stored in a dataset file: the alert-moment frame, the alert
/// tokens and the ground-truth labels.
struct Sample {
  int id = 0;
  sim::Scenario scenario = sim::Scenario::kKitchen;
  sim::ErrorType error_type = sim::ErrorType::kWrongAction;
  std::size_t step_index = 0;
  nn::Tensor frame;  // [13 x 8 x 8], 0/1
  int truth_region = 0;
  int truth_error_type = 0;
  int truth_action = 0;
  std::vector<int> tokens;  // 16 ids
  std::uint64_t seed = 0;   // make_trial seed
  bool operator==(const Sample&) const = default;
};

struct GenerateOptions {
  std::vector<sim::Scenario> scenarios = {sim::Scenario::kKitchen, sim::Scenario::kFactory};
  std::vector<sim::ErrorType> cases = {
      sim::ErrorType::kWrongAction, sim::ErrorType::kWrongRegion,
      sim::ErrorType::kWrongPose, sim::ErrorType::kWrongSpatialRelation};
  int n = 0;
  std::uint64_t seed = 0;
};

/// Trial i uses error type cases[i % k] and, with two scenarios, scenario
/// (i / k) % 2; its make_trial seed is mix(seed, i) and its alert comes from
/// generate_alert with the dataset seed. Usage error for n < 1 or empty lists.
std::vector<Sample> generate_dataset(const GenerateOptions& options);

Sample sample_from_trial(const sim::Trial& trial, std::vector<int> tokens);

/// Fields in fixed order: id, scenario, error_type, step_index, alert_frame,
/// truth_region, truth_error_type, truth_action, alert_tokens, seed.
std::string to_json_line(const Sample& sample);

/// MalformedData naming `line_no` on any structural or range problem,
/// including token ids at or above a nonzero `vocab_size`.
Sample parse_json_line(std::string_view line, std::size_t line_no, std::size_t vocab_size = 0);

/// Reads every nonblank line. Io if the file cannot be opened.
std::vector<Sample> read_dataset(const std::string& path, std::size_t vocab_size = 0);
std::vector<Sample> read_dataset(std::istream& in, std::size_t vocab_size = 0);
void write_dataset(const std::string& path, const std::vector<Sample>& samples);

/// Rebuilds the simulator trial behind a sample and checks that the stored
/// step index and frame agree with it (MalformedData otherwise).
sim::Trial reconstruct_trial(const Sample& sample);

}  // namespace h2r::model
