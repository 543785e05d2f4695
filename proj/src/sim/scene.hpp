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

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nn/tensor.hpp"

namespace h2r::sim {

inline constexpr int kGridSize = 8;
inline constexpr int kRegionGrid = 4;
inline constexpr int kNumRegions = kRegionGrid * kRegionGrid;
inline constexpr int kFrameChannels = 13;

enum class Scenario { kKitchen = 0, kFactory = 1 };

enum class ObjectKind {
  kCup = 0,
  kKettle,
  kPlate,
  kStove,
  kGearGood,
  kGearDefective,
  kBin,
  kConveyor,
};
inline constexpr int kNumObjectKinds = 8;

enum class Color { kRed = 0, kGreen, kBlue, kNone };

enum class Pose { kDeg0 = 0, kDeg90, kDeg180, kDeg270 };

enum class Verb { kMoveTo = 0, kGrasp, kLift, kPlace, kPour, kPress };
inline constexpr int kNumVerbs = 6;

enum class ErrorType {
  kWrongAction = 0,
  kWrongRegion = 1,
  kWrongPose = 2,
  kWrongSpatialRelation = 3,
};
inline constexpr int kNumErrorTypes = 4;

/// Correction catalog; indices 0..3 repair the error type of the same index.
enum class Action {
  kSwitchPrimitive = 0,
  kRetargetRegion = 1,
  kAdjustPose = 2,
  kAdjustRelation = 3,
  kContinue = 4,
};
inline constexpr int kNumActions = 5;

struct Cell {
  int row = 0;
  int col = 0;
  auto operator<=>(const Cell&) const = default;
};

struct Offset {
  int drow = 0;
  int dcol = 0;
  auto operator<=>(const Offset&) const = default;
};

bool in_bounds(Cell cell);
Cell operator+(Cell cell, Offset offset);

/// (row / 2) * 4 + col / 2; OutOfBounds for cells off the 8x8 grid.
int region_of(Cell cell);

struct ObjectInstance {
  ObjectKind kind = ObjectKind::kCup;
  Color color = Color::kNone;
  Cell cell;
  Pose required_pose = Pose::kDeg0;
  bool operator==(const ObjectInstance&) const = default;
};

bool is_graspable(ObjectKind kind);
bool is_container(ObjectKind kind);

struct RobotState {
  Cell gripper_cell;
  Pose gripper_pose = Pose::kDeg0;
  std::optional<std::size_t> held;  // index into Scene::objects
  bool lifted = false;
  bool operator==(const RobotState&) const = default;
};

/// Grid contents plus robot state. A held object shares the gripper cell and
/// an object placed in a bin shares the bin cell; every other object sits
/// alone in its cell. Generated scenes put each object in its own 2x2 region.
struct Scene {
  Scenario scenario = Scenario::kKitchen;
  std::vector<ObjectInstance> objects;
  RobotState robot;
  std::optional<Cell> last_pour;  // where the most recent pour landed
  bool operator==(const Scene&) const = default;
};

struct PrimitiveStep {
  Verb verb = Verb::kMoveTo;
  Cell target_cell;
  Pose pose = Pose::kDeg0;
  Offset relation_offset;
  bool operator==(const PrimitiveStep&) const = default;
};

enum class Goal { kServeWater, kDiscardDefectiveGear };

struct TaskScript {
  Scenario scenario = Scenario::kKitchen;
  std::vector<PrimitiveStep> steps;
  Goal goal = Goal::kServeWater;
  std::size_t goal_object = 0;  // target cup, or the defective gear
  std::size_t tool_object = 0;  // kettle, or the bin
  bool operator==(const TaskScript&) const = default;
};

struct ErrorSpec {
  ErrorType error_type = ErrorType::kWrongAction;
  std::size_t step_index = 0;
  PrimitiveStep corrupted_step;
  bool operator==(const ErrorSpec&) const = default;
};

struct Correction {
  Action action = Action::kContinue;
  int region = 0;
};

struct Outcome {
  bool success = false;
  Scene final_state;
};

struct Trial {
  int id = 0;
  Scenario scenario = Scenario::kKitchen;
  std::uint64_t seed = 0;
  Scene scene;
  TaskScript script;
  ErrorSpec error;
  nn::Tensor alert_frame;  // [13 x 8 x 8]
  int truth_region = 0;
  int truth_error_type = 0;
  int truth_action = 0;
  bool operator==(const Trial&) const = default;
};

// Names used in files and on the command line.
std::string_view to_string(Scenario scenario);
std::string_view to_string(ErrorType type);
std::string_view to_string(Action action);
std::string_view to_string(Verb verb);
std::string_view to_string(ObjectKind kind);
std::string_view to_string(Color color);
std::optional<Scenario> parse_scenario(std::string_view name);
std::optional<ErrorType> parse_error_type(std::string_view name);

/// Deterministic in (scenario, seed).
/// Kitchen: kettle, 2-3 cups of distinct colors, plate, stove.
/// Factory: one defective gear, 1-2 good gears, bin, conveyor.
Scene new_scene(Scenario scenario, std::uint64_t seed);

/// Throws MalformedScene when the invariants of Scene do not hold.
void validate_scene(const Scene& scene);

/// Kitchen: move_to kettle, grasp, lift, move_to cup, pour.
/// Factory: move_to defective gear, grasp, lift, move_to bin, place.
TaskScript script_task(const Scene& scene);

/// Picks the erroneous step and its corruption from `seed`, then confirms by
/// simulation that the corrupted script fails. NotApplicable when no step of
/// the script admits the error type.
ErrorSpec inject_error(const Scene& scene, const TaskScript& script,
                       ErrorType type, std::uint64_t seed);

/// Channels 0-7 object kind, 8-10 color, 11 gripper, 12 held-object flag at
/// the gripper cell. A held object is shown only through channel 12; an
/// object inside a container is hidden behind it.
nn::Tensor render(const Scene& scene);

/// Applies one step to the state in place.
void apply_step(Scene& state, const PrimitiveStep& step);

bool goal_satisfied(const TaskScript& script, const Scene& state);

/// The step that will run once `correction` is applied to the corrupted step.
PrimitiveStep corrected_step(const Scene& state, const TaskScript& script,
                             const ErrorSpec& error, const Correction& correction);

/// Runs the script (with the error substituted, and the correction applied at
/// the error step) from the initial scene.
Outcome execute(const Scene& initial, const TaskScript& script,
                const ErrorSpec* error = nullptr,
                const Correction* correction = nullptr);

/// State at the onset of step `step_index` of the (possibly corrupted) script.
Scene state_before_step(const Scene& initial, const TaskScript& script,
                        const ErrorSpec* error, std::size_t step_index);

/// The cell the alert is about: the intended target for wrong-region errors,
/// the mis-placed destination for wrong-relation errors, otherwise the
/// scripted target of the erroneous step.
Cell error_cell(const TaskScript& script, const ErrorSpec& error);

/// Composes new_scene, script_task, inject_error and render. id is 0.
Trial make_trial(Scenario scenario, ErrorType type, std::uint64_t seed);

/// Text board, one line per grid row, three characters per cell:
/// object letter, color letter, gripper overlay ('G' empty hand, '@' holding).
std::string to_ascii(const Scene& scene);

}  // namespace h2r::sim
