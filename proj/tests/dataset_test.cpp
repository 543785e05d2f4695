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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "corpus/alerts.hpp"
#include "json.hpp"
#include "model/dataset.hpp"

namespace h2r::model {
namespace {

using sim::ErrorType;
using sim::Scenario;

GenerateOptions small_options(int n, std::uint64_t seed) {
  GenerateOptions o;
  o.n = n;
  o.seed = seed;
  return o;
}

ErrorCode parse_code(const std::string& line, std::size_t vocab = 0) {
  try {
    parse_json_line(line, 7, vocab);
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 7"), std::string::npos) << e.what();
    return e.code();
  }
  ADD_FAILURE() << "parsed: " << line;
  return ErrorCode::kUsage;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("h2rat_dataset_test_" + name);
}

TEST(GenerateDataset, CyclesCasesThenScenarios) {
  const std::vector<Sample> data = generate_dataset(small_options(16, 3));
  ASSERT_EQ(data.size(), 16u);
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(data[i].id, static_cast<int>(i));
    EXPECT_EQ(static_cast<int>(data[i].error_type), static_cast<int>(i % 4));
    EXPECT_EQ(static_cast<int>(data[i].scenario), static_cast<int>((i / 4) % 2));
    EXPECT_EQ(data[i].seed, mix_seed(3, i));
    EXPECT_EQ(data[i].truth_action, data[i].truth_error_type);
    EXPECT_EQ(data[i].tokens.size(), corpus::kMaxTokens);
  }
}

TEST(GenerateDataset, SampleMatchesSimulatorAndCorpus) {
  const std::vector<Sample> data = generate_dataset(small_options(6, 11));
  for (const Sample& s : data) {
    sim::Trial t = sim::make_trial(s.scenario, s.error_type, s.seed);
    t.id = s.id;
    EXPECT_EQ(s.frame, t.alert_frame);
    EXPECT_EQ(s.truth_region, t.truth_region);
    EXPECT_EQ(s.step_index, t.error.step_index);
    EXPECT_EQ(s.tokens, corpus::generate_alert(t, 11).tokens);
  }
}

TEST(GenerateDataset, RestrictedCasesAndScenario) {
  GenerateOptions o = small_options(5, 0);
  o.scenarios = {Scenario::kFactory};
  o.cases = {ErrorType::kWrongPose};
  for (const Sample& s : generate_dataset(o)) {
    EXPECT_EQ(s.scenario, Scenario::kFactory);
    EXPECT_EQ(s.error_type, ErrorType::kWrongPose);
    EXPECT_EQ(s.truth_action, 2);
  }
}

TEST(GenerateDataset, NonPositiveCountIsUsageError) {
  try {
    generate_dataset(small_options(0, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUsage);
  }
  GenerateOptions o = small_options(3, 0);
  o.cases.clear();
  EXPECT_THROW(generate_dataset(o), Error);
}

TEST(GenerateDataset, ByteStable) {
  std::string a, b;
  for (const Sample& s : generate_dataset(small_options(8, 5))) a += to_json_line(s) + "\n";
  for (const Sample& s : generate_dataset(small_options(8, 5))) b += to_json_line(s) + "\n";
  EXPECT_EQ(a, b);
}

TEST(JsonLine, FieldOrderIsFixed) {
  const Sample s = generate_dataset(small_options(1, 0)).front();
  const std::string line = to_json_line(s);
  const char* fields[] = {"\"id\"", "\"scenario\"", "\"error_type\"", "\"step_index\"",
                          "\"alert_frame\"", "\"truth_region\"", "\"truth_error_type\"",
                          "\"truth_action\"", "\"alert_tokens\"", "\"seed\""};
  std::size_t pos = 0;
  for (const char* f : fields) {
    const std::size_t at = line.find(f, pos);
    ASSERT_NE(at, std::string::npos) << f;
    pos = at;
  }
  EXPECT_EQ(line.find('\n'), std::string::npos);
  const auto j = nlohmann::json::parse(line);
  EXPECT_EQ(j.size(), 10u);
  EXPECT_EQ(j["alert_frame"].size(), 13u);
  EXPECT_EQ(j["alert_frame"][0].size(), 8u);
  EXPECT_EQ(j["alert_frame"][0][0].size(), 8u);
}

TEST(JsonLine, RoundTrip) {
  for (const Sample& s : generate_dataset(small_options(12, 9))) {
    EXPECT_EQ(parse_json_line(to_json_line(s), 1, corpus::builtin_vocab().size()), s);
  }
}

TEST(JsonLine, MalformedInputsNameTheLine) {
  const std::string good = to_json_line(generate_dataset(small_options(1, 0)).front());
  auto edit = [&](auto&& fn) {
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(good);
    fn(j);
    return j.dump();
  };
  EXPECT_EQ(parse_code("not json"), ErrorCode::kMalformedData);
  EXPECT_EQ(parse_code("[1,2]"), ErrorCode::kMalformedData);
  EXPECT_EQ(parse_code(edit([](auto& j) { j.erase("seed"); })), ErrorCode::kMalformedData);
  EXPECT_EQ(parse_code(edit([](auto& j) { j["scenario"] = "garage"; })), ErrorCode::kMalformedData);
  EXPECT_EQ(parse_code(edit([](auto& j) { j["error_type"] = "wrong_color"; })),
            ErrorCode::kMalformedData);
  EXPECT_EQ(parse_code(edit([](auto& j) { j["truth_region"] = 16; })), ErrorCode::kMalformedData);
  EXPECT_EQ(parse_code(edit([](auto& j) { j["truth_action"] = 5; })), ErrorCode::kMalformedData);
  EXPECT_EQ(parse_code(edit([](auto& j) { j["alert_frame"][0][0][0] = 2; })),
            ErrorCode::kMalformedData);
  EXPECT_EQ(parse_code(edit([](auto& j) { j["alert_frame"].erase(0); })),
            ErrorCode::kMalformedData);
  EXPECT_EQ(parse_code(edit([](auto& j) { j["alert_tokens"].erase(0); })),
            ErrorCode::kMalformedData);
  EXPECT_EQ(parse_code(edit([](auto& j) { j["alert_tokens"][1] = 106; }), 106),
            ErrorCode::kMalformedData);
  EXPECT_EQ(parse_code(edit([](auto& j) { j["alert_tokens"][1] = -1; })), ErrorCode::kMalformedData);
  EXPECT_EQ(parse_code(edit([](auto& j) { j["id"] = "zero"; })), ErrorCode::kMalformedData);
}

TEST(ReadDataset, SkipsBlankLinesAndReportsLineNumbers) {
  const std::vector<Sample> data = generate_dataset(small_options(2, 0));
  std::stringstream ok;
  ok << to_json_line(data[0]) << "\n\n" << to_json_line(data[1]) << "\n";
  EXPECT_EQ(read_dataset(ok), data);

  std::stringstream bad;
  bad << to_json_line(data[0]) << "\n\n{\"id\": 1}\n";
  try {
    read_dataset(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedData);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(ReadDataset, MissingFileIsIo) {
  try {
    read_dataset("/nonexistent/h2rat/data.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(ReadDataset, FileRoundTrip) {
  const auto path = temp_path("roundtrip.jsonl");
  const std::vector<Sample> data = generate_dataset(small_options(5, 21));
  write_dataset(path.string(), data);
  EXPECT_EQ(read_dataset(path.string(), corpus::builtin_vocab().size()), data);
  std::filesystem::remove(path);
}

TEST(ReconstructTrial, AgreesWithStoredSample) {
  for (const Sample& s : generate_dataset(small_options(8, 2))) {
    const sim::Trial t = reconstruct_trial(s);
    EXPECT_EQ(t.id, s.id);
    EXPECT_EQ(t.alert_frame, s.frame);
  }
}

TEST(ReconstructTrial, TamperedFrameIsMalformed) {
  Sample s = generate_dataset(small_options(1, 2)).front();
  s.frame.at(0, 0, 0) = 1.0 - s.frame.at(0, 0, 0);
  try {
    reconstruct_trial(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedData);
  }
}

TEST(ReconstructTrial, TamperedRegionIsMalformed) {
  Sample s = generate_dataset(small_options(1, 2)).front();
  s.truth_region = (s.truth_region + 1) % sim::kNumRegions;
  EXPECT_THROW(reconstruct_trial(s), Error);
}

}  // namespace
}  // namespace h2r::model
