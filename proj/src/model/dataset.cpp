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

#include "model/dataset.hpp"

#include <fstream>
#include <sstream>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "corpus/alerts.hpp"
#include "json.hpp"

namespace h2r::model {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void bad_line(std::size_t line_no, const std::string& what) {
  fail(ErrorCode::kMalformedData, "line " + std::to_string(line_no) + ": " + what);
}

int int_in_range(const ordered_json& j, const char* key, int lo, int hi, std::size_t line_no) {
  const auto& v = j.at(key);
  if (!v.is_number_integer()) bad_line(line_no, std::string(key) + " is not an integer");
  const auto x = v.get<long long>();
  if (x < lo || x > hi) {
    bad_line(line_no, std::string(key) + " = " + std::to_string(x) + " outside [" +
                          std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return static_cast<int>(x);
}

}  // namespace

Sample sample_from_trial(const sim::Trial& trial, std::vector<int> tokens) {
  Sample s;
  s.id = trial.id;
  s.scenario = trial.scenario;
  s.error_type = trial.error.error_type;
  s.step_index = trial.error.step_index;
  s.frame = trial.alert_frame;
  s.truth_region = trial.truth_region;
  s.truth_error_type = trial.truth_error_type;
  s.truth_action = trial.truth_action;
  s.tokens = std::move(tokens);
  s.seed = trial.seed;
  return s;
}

std::vector<Sample> generate_dataset(const GenerateOptions& options) {
  if (options.n < 1) fail(ErrorCode::kUsage, "dataset size must be at least 1");
  if (options.cases.empty() || options.scenarios.empty()) {
    fail(ErrorCode::kUsage, "dataset needs at least one scenario and one error type");
  }
  const std::size_t k = options.cases.size();
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(options.n));
  for (std::size_t i = 0; i < static_cast<std::size_t>(options.n); ++i) {
    const sim::Scenario scenario = options.scenarios[(i / k) % options.scenarios.size()];
    sim::Trial trial = sim::make_trial(scenario, options.cases[i % k], mix_seed(options.seed, i));
    trial.id = static_cast<int>(i);
    corpus::Alert alert = corpus::generate_alert(trial, options.seed);
    out.push_back(sample_from_trial(trial, std::move(alert.tokens)));
  }
  return out;
}

std::string to_json_line(const Sample& s) {
  ordered_json frame = ordered_json::array();
  for (std::size_t c = 0; c < s.frame.dim(0); ++c) {
    ordered_json rows = ordered_json::array();
    for (std::size_t r = 0; r < s.frame.dim(1); ++r) {
      ordered_json cells = ordered_json::array();
      for (std::size_t q = 0; q < s.frame.dim(2); ++q) {
        cells.push_back(static_cast<int>(s.frame.at(c, r, q)));
      }
      rows.push_back(std::move(cells));
    }
    frame.push_back(std::move(rows));
  }
  ordered_json j;
  j["id"] = s.id;
  j["scenario"] = sim::to_string(s.scenario);
  j["error_type"] = sim::to_string(s.error_type);
  j["step_index"] = s.step_index;
  j["alert_frame"] = std::move(frame);
  j["truth_region"] = s.truth_region;
  j["truth_error_type"] = s.truth_error_type;
  j["truth_action"] = s.truth_action;
  j["alert_tokens"] = s.tokens;
  j["seed"] = s.seed;
  return j.dump();
}

Sample parse_json_line(std::string_view line, std::size_t line_no, std::size_t vocab_size) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    bad_line(line_no, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) bad_line(line_no, "expected a JSON object");
  try {
    Sample s;
    s.id = int_in_range(j, "id", 0, 1 << 30, line_no);
    const auto scenario = sim::parse_scenario(j.at("scenario").get<std::string>());
    if (!scenario) bad_line(line_no, "unknown scenario");
    s.scenario = *scenario;
    const auto type = sim::parse_error_type(j.at("error_type").get<std::string>());
    if (!type) bad_line(line_no, "unknown error_type");
    s.error_type = *type;
    s.step_index = static_cast<std::size_t>(int_in_range(j, "step_index", 0, 64, line_no));
    s.truth_region = int_in_range(j, "truth_region", 0, sim::kNumRegions - 1, line_no);
    s.truth_error_type = int_in_range(j, "truth_error_type", 0, sim::kNumErrorTypes - 1, line_no);
    s.truth_action = int_in_range(j, "truth_action", 0, sim::kNumActions - 1, line_no);

    const auto& frame = j.at("alert_frame");
    constexpr std::size_t kC = sim::kFrameChannels, kN = sim::kGridSize;
    if (!frame.is_array() || frame.size() != kC) bad_line(line_no, "alert_frame is not 13x8x8");
    s.frame = nn::Tensor({kC, kN, kN});
    for (std::size_t c = 0; c < kC; ++c) {
      if (!frame[c].is_array() || frame[c].size() != kN) bad_line(line_no, "alert_frame is not 13x8x8");
      for (std::size_t r = 0; r < kN; ++r) {
        const auto& row = frame[c][r];
        if (!row.is_array() || row.size() != kN) bad_line(line_no, "alert_frame is not 13x8x8");
        for (std::size_t q = 0; q < kN; ++q) {
          if (!row[q].is_number_integer() || (row[q] != 0 && row[q] != 1)) {
            bad_line(line_no, "alert_frame entries must be 0 or 1");
          }
          s.frame.at(c, r, q) = row[q].get<int>();
        }
      }
    }

    const auto& tokens = j.at("alert_tokens");
    if (!tokens.is_array() || tokens.size() != corpus::kMaxTokens) {
      bad_line(line_no, "alert_tokens must hold 16 ids");
    }
    for (const auto& t : tokens) {
      if (!t.is_number_integer() || t.get<long long>() < 0) {
        bad_line(line_no, "alert_tokens must be nonnegative integers");
      }
      if (vocab_size != 0 && t.get<unsigned long long>() >= vocab_size) {
        bad_line(line_no, "token id " + t.dump() + " outside the vocabulary");
      }
      s.tokens.push_back(t.get<int>());
    }
    if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer()) {
      bad_line(line_no, "seed is not an integer");
    }
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    bad_line(line_no, e.what());
  }
}

std::vector<Sample> read_dataset(std::istream& in, std::size_t vocab_size) {
  std::vector<Sample> out;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_json_line(line, line_no, vocab_size));
  }
  return out;
}

std::vector<Sample> read_dataset(const std::string& path, std::size_t vocab_size) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open dataset " + path);
  return read_dataset(in, vocab_size);
}

void write_dataset(const std::string& path, const std::vector<Sample>& samples) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  for (const Sample& s : samples) out << to_json_line(s) << '\n';
  if (!out.flush()) fail(ErrorCode::kIo, "write failed for " + path);
}

sim::Trial reconstruct_trial(const Sample& sample) {
  sim::Trial trial;
  try {
    trial = sim::make_trial(sample.scenario, sample.error_type, sample.seed);
  } catch (const Error& e) {
    fail(ErrorCode::kMalformedData,
         "trial " + std::to_string(sample.id) + " cannot be rebuilt: " + e.what());
  }
  trial.id = sample.id;
  if (trial.error.step_index != sample.step_index || trial.alert_frame != sample.frame ||
      trial.truth_region != sample.truth_region) {
    fail(ErrorCode::kMalformedData,
         "trial " + std::to_string(sample.id) + " does not match its seed");
  }
  return trial;
}

}  // namespace h2r::model
