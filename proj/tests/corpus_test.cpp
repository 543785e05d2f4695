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

#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "common/error.hpp"
#include "corpus/alerts.hpp"
#include "sim/scene.hpp"

namespace h2r::corpus {
namespace {

using sim::ErrorType;
using sim::Scenario;

std::vector<int> ids_of(std::initializer_list<const char*> words) {
  std::vector<int> ids = {kBos};
  for (const char* w : words) ids.push_back(builtin_vocab().id(w));
  ids.push_back(kEos);
  ids.resize(kMaxTokens, kPad);
  return ids;
}

// First kitchen wrong-region trial that heads for the wrong cup while the
// intended cup sits in region 0.
sim::Trial region_zero_trial() {
  for (std::uint64_t seed = 0;; ++seed) {
    sim::Trial t = sim::make_trial(Scenario::kKitchen, ErrorType::kWrongRegion, seed);
    const sim::Cell target = t.script.steps[t.error.step_index].target_cell;
    if (t.truth_region == 0 && target == t.scene.objects[t.script.goal_object].cell) return t;
  }
}

bool contains_word(const std::string& text, const std::string& word) {
  const std::string padded = " " + text + " ";
  return padded.find(" " + word + " ") != std::string::npos;
}

TEST(Vocab, ShippedVocabMatchesTemplateTable) {
  EXPECT_EQ(build_vocab(builtin_templates()), builtin_vocab());
  EXPECT_GE(builtin_vocab().size(), 100u);
  EXPECT_LE(builtin_vocab().size(), 160u);
  EXPECT_EQ(builtin_vocab().size(), 106u);
}

TEST(Vocab, ReservedTokensFirst) {
  const Vocabulary& v = builtin_vocab();
  EXPECT_EQ(v.token(kPad), "<pad>");
  EXPECT_EQ(v.token(kUnk), "<unk>");
  EXPECT_EQ(v.token(kBos), "<bos>");
  EXPECT_EQ(v.token(kEos), "<eos>");
  EXPECT_TRUE(std::is_sorted(v.tokens().begin() + 4, v.tokens().end()));
}

TEST(Vocab, BijectiveIds) {
  const Vocabulary& v = builtin_vocab();
  for (std::size_t i = 4; i < v.size(); ++i) EXPECT_EQ(v.id(v.token(static_cast<int>(i))), static_cast<int>(i));
}

TEST(Vocab, TwoBuildsAgree) {
  EXPECT_EQ(build_vocab(builtin_templates()).hash(), build_vocab(builtin_templates()).hash());
}

TEST(Vocab, EmptyTableGivesReservedTokensOnly) {
  const Vocabulary v = build_vocab(TemplateTable{});
  EXPECT_EQ(v.size(), 4u);
}

TEST(Vocab, DuplicateTokenIsMalformed) {
  try {
    Vocabulary::from_lines("<pad>\n<unk>\n<bos>\n<eos>\nstop\nstop\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedData);
  }
}

TEST(Vocab, LinesRoundTrip) {
  EXPECT_EQ(Vocabulary::from_lines(builtin_vocab().to_lines()), builtin_vocab());
}

TEST(TemplateTable, AtLeastEightTemplatesPerType) {
  for (const auto& per_type : builtin_templates().templates) EXPECT_GE(per_type.size(), 8u);
}

TEST(TemplateTable, BadLineReportsLineNumber) {
  try {
    parse_template_table("# comment\ntemplate\twrong_action\tok {loc}\nbogus line\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedData);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(TemplateTable, UnknownErrorTypeIsMalformed) {
  EXPECT_THROW(parse_template_table("template\twrong_color\tstop {loc}\n"), Error);
}

TEST(Tokenize, EmptyString) {
  std::vector<int> expected(kMaxTokens, kPad);
  expected[0] = kBos;
  expected[1] = kEos;
  EXPECT_EQ(tokenize("", builtin_vocab()), expected);
}

TEST(Tokenize, PunctuationAndCase) {
  EXPECT_EQ(tokenize("Stop! Wrong cup.", builtin_vocab()), ids_of({"stop", "wrong", "cup"}));
  EXPECT_NE(builtin_vocab().id("stop"), kUnk);
  EXPECT_NE(builtin_vocab().id("cup"), kUnk);
}

TEST(Tokenize, UnknownWordMapsToUnk) {
  const std::vector<int> ids = tokenize("xylophone", builtin_vocab());
  EXPECT_EQ(ids[1], kUnk);
  EXPECT_EQ(ids.size(), kMaxTokens);
}

TEST(Tokenize, OverlongInputKeepsBosAndEndsWithEos) {
  std::string text;
  for (int i = 0; i < 40; ++i) text += "stop ";
  const std::vector<int> ids = tokenize(text, builtin_vocab());
  ASSERT_EQ(ids.size(), kMaxTokens);
  EXPECT_EQ(ids.front(), kBos);
  EXPECT_EQ(ids.back(), kEos);
  for (std::size_t i = 1; i + 1 < kMaxTokens; ++i) EXPECT_EQ(ids[i], builtin_vocab().id("stop"));
}

TEST(Tokenize, ExactlyFourteenWordsFit) {
  const std::vector<int> ids =
      tokenize("stop you are moving to the wrong cup the one at the top left", builtin_vocab());
  EXPECT_EQ(ids[15], kEos);
  EXPECT_EQ(ids[14], builtin_vocab().id("left"));
}

TEST(LocationPhrase, BothStyles) {
  EXPECT_EQ(location_phrase(0, 0, builtin_templates()), "top left");
  EXPECT_EQ(location_phrase(15, 0, builtin_templates()), "bottom right");
  EXPECT_EQ(location_phrase(6, 1, builtin_templates()), "row two column three");
}

TEST(GenerateAlert, RegionZeroFixture) {
  const sim::Trial t = region_zero_trial();
  EXPECT_EQ(generate_alert(t, 0).text, "wait wrong cup go to the one in the top left");
}

TEST(GenerateAlert, TemplateTableProducesCanonicalRegionZeroSentence) {
  // The canonical wording appears among the first jittered renderings at seed 0.
  sim::Trial t = region_zero_trial();
  const std::string target = "stop you are moving to the wrong cup the one at the top left";
  bool found = false;
  for (int id = 0; id < 2000 && !found; ++id) {
    t.id = id;
    found = generate_alert(t, 0).text == target;
  }
  EXPECT_TRUE(found);
}

TEST(GenerateAlert, Deterministic) {
  const sim::Trial t = sim::make_trial(Scenario::kFactory, ErrorType::kWrongPose, 11);
  EXPECT_EQ(generate_alert(t, 5).text, generate_alert(t, 5).text);
  EXPECT_EQ(generate_alert(t, 5).tokens, generate_alert(t, 5).tokens);
}

TEST(GenerateAlert, WrongPoseMentionsPoseOrRotate) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    sim::Trial t = sim::make_trial(s % 2 ? Scenario::kFactory : Scenario::kKitchen,
                                   ErrorType::kWrongPose, s);
    t.id = static_cast<int>(s);
    const std::string text = generate_alert(t, 3).text;
    EXPECT_TRUE(contains_word(text, "pose") || contains_word(text, "rotate")) << text;
  }
}

TEST(GenerateAlert, NoUnknownTokensAndFixedLength) {
  for (int type = 0; type < sim::kNumErrorTypes; ++type) {
    for (std::uint64_t s = 0; s < 300; ++s) {
      sim::Trial t = sim::make_trial(s % 2 ? Scenario::kFactory : Scenario::kKitchen,
                                     static_cast<ErrorType>(type), s);
      t.id = static_cast<int>(s);
      const Alert a = generate_alert(t, 9);
      ASSERT_EQ(a.tokens.size(), kMaxTokens);
      EXPECT_EQ(a.tokens, tokenize(a.text, builtin_vocab()));
      EXPECT_EQ(std::count(a.tokens.begin(), a.tokens.end(), kUnk), 0) << a.text;
      EXPECT_EQ(std::count(a.tokens.begin(), a.tokens.end(), kEos), 1) << a.text;
      for (int id : a.tokens) EXPECT_LT(id, static_cast<int>(builtin_vocab().size()));
    }
  }
}

TEST(GenerateAlert, EveryRegionPhraseAppearsPerErrorType) {
  for (int type = 0; type < sim::kNumErrorTypes; ++type) {
    std::set<int> regions;
    for (std::uint64_t s = 0; s < 1000; ++s) {
      sim::Trial t = sim::make_trial(s % 2 ? Scenario::kFactory : Scenario::kKitchen,
                                     static_cast<ErrorType>(type), s);
      t.id = static_cast<int>(s);
      const std::string text = generate_alert(t, 1).text;
      for (int r = 0; r < sim::kNumRegions; ++r) {
        for (int style = 0; style < 2; ++style) {
          if (text.find(location_phrase(r, style, builtin_templates())) != std::string::npos) {
            regions.insert(r);
          }
        }
      }
      const bool names_truth =
          text.find(location_phrase(t.truth_region, 0, builtin_templates())) != std::string::npos ||
          text.find(location_phrase(t.truth_region, 1, builtin_templates())) != std::string::npos;
      EXPECT_TRUE(names_truth) << text;
    }
    EXPECT_EQ(regions.size(), static_cast<std::size_t>(sim::kNumRegions)) << type;
  }
}

TEST(GenerateAlert, EmptyTemplateListIsMalformed) {
  TemplateTable table = builtin_templates();
  table.templates[0].clear();
  const sim::Trial t = sim::make_trial(Scenario::kKitchen, ErrorType::kWrongAction, 0);
  EXPECT_THROW(generate_alert(t, 0, table), Error);
}

}  // namespace
}  // namespace h2r::corpus
