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

#include <set>

#include <gtest/gtest.h>

#include "common/error.hpp"
#include "sim/scene.hpp"

namespace h2r::sim {
namespace {

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an h2r::Error";
  return ErrorCode::kUsage;
}

int count_kind(const Scene& s, ObjectKind kind) {
  int n = 0;
  for (const auto& o : s.objects) n += o.kind == kind;
  return n;
}

TEST(RegionOf, Examples) {
  EXPECT_EQ(region_of({0, 0}), 0);
  EXPECT_EQ(region_of({7, 7}), 15);
  EXPECT_EQ(region_of({3, 4}), 6);
}

TEST(RegionOf, OffGridIsOutOfBounds) {
  EXPECT_EQ(code_of([] { region_of({8, 0}); }), ErrorCode::kOutOfBounds);
  EXPECT_EQ(code_of([] { region_of({0, -1}); }), ErrorCode::kOutOfBounds);
}

TEST(RegionOf, PartitionsGridIntoBlocksOfFour) {
  std::array<int, kNumRegions> sizes{};
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) ++sizes[static_cast<std::size_t>(region_of({r, c}))];
  }
  for (int n : sizes) EXPECT_EQ(n, 4);
}

TEST(NewScene, KitchenSeedZeroGolden) {
  const Scene s = new_scene(Scenario::kKitchen, 0);
  EXPECT_EQ(to_ascii(s),
            "... ... ... ... ... ... ... ...\n"
            "... ... ... ... ... ... cg. ...\n"
            "... ... ... ... ... ... ... ...\n"
            "... ... ... ..G ... ... ... p..\n"
            "... ... ... ... ... ... ... ...\n"
            "... cb. ... ... ... k.. ... ...\n"
            "... ... ... ... ... ... ... ...\n"
            "... s.. ... ... ... ... ... ...\n");
}

TEST(NewScene, Deterministic) {
  for (auto sc : {Scenario::kKitchen, Scenario::kFactory}) {
    EXPECT_EQ(new_scene(sc, 0), new_scene(sc, 0));
    EXPECT_EQ(new_scene(sc, 123456789), new_scene(sc, 123456789));
  }
}

TEST(NewScene, FactorySevenHasExactlyOneDefectiveGear) {
  EXPECT_EQ(count_kind(new_scene(Scenario::kFactory, 7), ObjectKind::kGearDefective), 1);
}

TEST(NewScene, InvariantsHoldOverManySeeds) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    for (auto sc : {Scenario::kKitchen, Scenario::kFactory}) {
      const Scene s = new_scene(sc, seed);
      EXPECT_NO_THROW(validate_scene(s)) << seed;
      std::set<int> regions;
      for (const auto& o : s.objects) {
        EXPECT_TRUE(regions.insert(region_of(o.cell)).second) << "shared region, seed " << seed;
      }
      if (sc == Scenario::kKitchen) {
        EXPECT_EQ(count_kind(s, ObjectKind::kKettle), 1);
        EXPECT_GE(count_kind(s, ObjectKind::kCup), 2);
      } else {
        EXPECT_GE(count_kind(s, ObjectKind::kGearGood), 1);
        EXPECT_EQ(count_kind(s, ObjectKind::kBin), 1);
      }
    }
  }
}

TEST(ScriptTask, KitchenEndsInPourOverTargetCup) {
  const Scene s = new_scene(Scenario::kKitchen, 0);
  const TaskScript script = script_task(s);
  ASSERT_EQ(script.steps.size(), 5u);
  EXPECT_EQ(script.steps.back().verb, Verb::kPour);
  EXPECT_EQ(script.steps.back().relation_offset, Offset{});
  EXPECT_EQ(script.steps.back().target_cell, s.objects[script.goal_object].cell);
  EXPECT_EQ(s.objects[script.goal_object].kind, ObjectKind::kCup);
}

TEST(ScriptTask, FactoryPlacesIntoBin) {
  const Scene s = new_scene(Scenario::kFactory, 0);
  const TaskScript script = script_task(s);
  EXPECT_EQ(script.steps.back().verb, Verb::kPlace);
  EXPECT_EQ(script.steps.back().target_cell, s.objects[script.tool_object].cell);
  EXPECT_EQ(s.objects[script.tool_object].kind, ObjectKind::kBin);
}

TEST(ScriptTask, MissingBinIsMalformedScene) {
  Scene s = new_scene(Scenario::kFactory, 0);
  std::erase_if(s.objects, [](const ObjectInstance& o) { return o.kind == ObjectKind::kBin; });
  EXPECT_EQ(code_of([&] { script_task(s); }), ErrorCode::kMalformedScene);
}

TEST(Execute, ErrorFreeScriptsSucceed) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    for (auto sc : {Scenario::kKitchen, Scenario::kFactory}) {
      const Scene s = new_scene(sc, seed);
      EXPECT_TRUE(execute(s, script_task(s)).success) << seed;
    }
  }
}

TEST(InjectError, FactoryWrongPoseRotatesGraspByQuarterTurn) {
  const Scene s = new_scene(Scenario::kFactory, 0);
  const TaskScript script = script_task(s);
  const ErrorSpec e = inject_error(s, script, ErrorType::kWrongPose, 3);
  const PrimitiveStep& scripted = script.steps[e.step_index];
  EXPECT_EQ(scripted.verb, Verb::kGrasp);
  const int diff = (static_cast<int>(e.corrupted_step.pose) - static_cast<int>(scripted.pose) + 4) % 4;
  EXPECT_TRUE(diff == 1 || diff == 3) << diff;
  EXPECT_FALSE(execute(s, script, &e).success);
}

TEST(InjectError, KitchenWrongRegionTargetsDistractorCup) {
  const Scene s = new_scene(Scenario::kKitchen, 0);
  const TaskScript script = script_task(s);
  const ErrorSpec e = inject_error(s, script, ErrorType::kWrongRegion, 1);
  const PrimitiveStep& scripted = script.steps[e.step_index];
  EXPECT_EQ(scripted.verb, Verb::kMoveTo);
  EXPECT_NE(e.corrupted_step.target_cell, scripted.target_cell);
  if (scripted.target_cell == s.objects[script.goal_object].cell) {
    bool hits_cup = false;
    for (const auto& o : s.objects) {
      hits_cup |= o.kind == ObjectKind::kCup && o.cell == e.corrupted_step.target_cell;
    }
    EXPECT_TRUE(hits_cup);
  }
}

TEST(InjectError, CorruptionChangesOnlyTheNamedField) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    for (auto sc : {Scenario::kKitchen, Scenario::kFactory}) {
      for (int t = 0; t < kNumErrorTypes; ++t) {
        const Trial trial = make_trial(sc, static_cast<ErrorType>(t), seed);
        const PrimitiveStep& a = trial.script.steps[trial.error.step_index];
        const PrimitiveStep& b = trial.error.corrupted_step;
        EXPECT_EQ(a.verb != b.verb, t == 0);
        EXPECT_EQ(a.target_cell != b.target_cell, t == 1);
        EXPECT_EQ(a.pose != b.pose, t == 2);
        EXPECT_EQ(a.relation_offset != b.relation_offset, t == 3);
      }
    }
  }
}

TEST(InjectError, NoPlaceOrPourIsNotApplicable) {
  const Scene s = new_scene(Scenario::kKitchen, 0);
  TaskScript script = script_task(s);
  script.steps.pop_back();
  EXPECT_EQ(code_of([&] { inject_error(s, script, ErrorType::kWrongSpatialRelation, 0); }),
            ErrorCode::kNotApplicable);
}

TEST(Render, EmptySceneShowsOnlyGripper) {
  Scene s;
  s.robot.gripper_cell = {0, 0};
  const nn::Tensor f = render(s);
  double total = 0.0;
  for (double v : f.data()) total += v;
  EXPECT_EQ(total, 1.0);
  EXPECT_EQ(f.at(11, 0, 0), 1.0);
}

TEST(Render, KindAndColorChannelsAreOneHot) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (int t = 0; t < kNumErrorTypes; ++t) {
      const Trial trial = make_trial(seed % 2 ? Scenario::kFactory : Scenario::kKitchen,
                                     static_cast<ErrorType>(t), seed);
      for (int r = 0; r < kGridSize; ++r) {
        for (int c = 0; c < kGridSize; ++c) {
          double kinds = 0.0, colors = 0.0;
          for (std::size_t ch = 0; ch < 8; ++ch) kinds += trial.alert_frame.at(ch, r, c);
          for (std::size_t ch = 8; ch < 11; ++ch) colors += trial.alert_frame.at(ch, r, c);
          EXPECT_LE(kinds, 1.0);
          EXPECT_LE(colors, 1.0);
        }
      }
      for (double v : trial.alert_frame.data()) EXPECT_TRUE(v == 0.0 || v == 1.0);
    }
  }
}

TEST(MakeTrial, KitchenWrongRegionMapsToRetarget) {
  const Trial t = make_trial(Scenario::kKitchen, ErrorType::kWrongRegion, 42);
  EXPECT_EQ(t.truth_action, 1);
  EXPECT_EQ(t.truth_error_type, 1);
}

TEST(MakeTrial, Deterministic) {
  EXPECT_EQ(make_trial(Scenario::kFactory, ErrorType::kWrongPose, 9),
            make_trial(Scenario::kFactory, ErrorType::kWrongPose, 9));
}

TEST(MakeTrial, FactoryWrongRelationRegionIsCorruptedPlaceCell) {
  const Trial t = make_trial(Scenario::kFactory, ErrorType::kWrongSpatialRelation, 5);
  const PrimitiveStep& scripted = t.script.steps[t.error.step_index];
  EXPECT_EQ(scripted.verb, Verb::kPlace);
  EXPECT_EQ(t.truth_region, region_of(scripted.target_cell + t.error.corrupted_step.relation_offset));
  EXPECT_NE(t.truth_region, -1);
}

TEST(MakeTrial, AlertFrameIsStateAtErrorOnset) {
  const Trial t = make_trial(Scenario::kKitchen, ErrorType::kWrongAction, 3);
  EXPECT_EQ(t.alert_frame, render(state_before_step(t.scene, t.script, &t.error,
                                                    t.error.step_index)));
}

TEST(Guarantees, UncorrectedFailsAndTruthCorrectionSucceeds) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    for (auto sc : {Scenario::kKitchen, Scenario::kFactory}) {
      for (int type = 0; type < kNumErrorTypes; ++type) {
        const Trial t = make_trial(sc, static_cast<ErrorType>(type), seed * 7 + 1);
        EXPECT_FALSE(execute(t.scene, t.script, &t.error).success);
        const Correction truth{static_cast<Action>(t.truth_action), t.truth_region};
        EXPECT_TRUE(execute(t.scene, t.script, &t.error, &truth).success)
            << to_string(sc) << " " << type << " seed " << seed;
        const Correction cont{Action::kContinue, 0};
        EXPECT_FALSE(execute(t.scene, t.script, &t.error, &cont).success);
      }
    }
  }
}

TEST(Execute, WrongPoseFixedByAdjustPoseWhateverTheRegion) {
  const Trial t = make_trial(Scenario::kKitchen, ErrorType::kWrongPose, 17);
  for (int region = 0; region < kNumRegions; ++region) {
    const Correction c{Action::kAdjustPose, region};
    EXPECT_TRUE(execute(t.scene, t.script, &t.error, &c).success) << region;
  }
}

TEST(Names, RoundTrip) {
  for (int t = 0; t < kNumErrorTypes; ++t) {
    EXPECT_EQ(parse_error_type(to_string(static_cast<ErrorType>(t))), static_cast<ErrorType>(t));
  }
  EXPECT_EQ(parse_scenario("factory"), Scenario::kFactory);
  EXPECT_FALSE(parse_scenario("garage").has_value());
}

}  // namespace
}  // namespace h2r::sim
