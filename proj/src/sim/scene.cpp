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

#include "sim/scene.hpp"

#include <algorithm>
#include <array>
#include <span>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace h2r::sim {
namespace {

constexpr std::array<Offset, 8> kNeighbours = {{
    {-1, 0}, {0, 1}, {1, 0}, {0, -1}, {-1, -1}, {-1, 1}, {1, 1}, {1, -1},
}};

std::string cell_str(Cell c) {
  return "(" + std::to_string(c.row) + "," + std::to_string(c.col) + ")";
}

// Index of the object resting at `cell` (not held). Containers win over
// anything placed inside them.
std::optional<std::size_t> resting_at(const Scene& scene, Cell cell) {
  std::optional<std::size_t> found;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    if (scene.robot.held == i || scene.objects[i].cell != cell) continue;
    if (!found || is_container(scene.objects[i].kind)) found = i;
  }
  return found;
}

std::optional<std::size_t> find_kind(const Scene& scene, ObjectKind kind) {
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    if (scene.objects[i].kind == kind) return i;
  }
  return std::nullopt;
}

Pose rotate(Pose pose, int quarter_turns) {
  return static_cast<Pose>((static_cast<int>(pose) + quarter_turns) % 4);
}

Cell random_cell_in_region(int region, Rng& rng) {
  const int r0 = (region / kRegionGrid) * 2;
  const int c0 = (region % kRegionGrid) * 2;
  const int k = static_cast<int>(rng.below(4));
  return {r0 + k / 2, c0 + k % 2};
}

std::vector<PrimitiveStep> candidates_for(const Scene& scene,
                                          const PrimitiveStep& step,
                                          ErrorType type, Rng& rng) {
  std::vector<PrimitiveStep> out;
  switch (type) {
    case ErrorType::kWrongAction: {
      for (int v = 0; v < kNumVerbs; ++v) {
        if (static_cast<Verb>(v) == step.verb) continue;
        PrimitiveStep s = step;
        s.verb = static_cast<Verb>(v);
        out.push_back(s);
      }
      break;
    }
    case ErrorType::kWrongRegion: {
      const auto target = resting_at(scene, step.target_cell);
      std::vector<PrimitiveStep> same_kind, other_kind;
      for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        if (target == i || scene.robot.held == i) continue;
        PrimitiveStep s = step;
        s.target_cell = scene.objects[i].cell;
        const bool same =
            target && scene.objects[i].kind == scene.objects[*target].kind;
        (same ? same_kind : other_kind).push_back(s);
      }
      // Another object of the intended kind is the most plausible mistake;
      // the others stay available as fallbacks.
      if (!same_kind.empty()) {
        std::rotate(same_kind.begin(),
                    same_kind.begin() + rng.below(same_kind.size()),
                    same_kind.end());
        out = same_kind;
        out.insert(out.end(), other_kind.begin(), other_kind.end());
        return out;
      }
      out = other_kind;
      break;
    }
    case ErrorType::kWrongPose: {
      for (int turns : {1, 3}) {
        PrimitiveStep s = step;
        s.pose = rotate(step.pose, turns);
        out.push_back(s);
      }
      break;
    }
    case ErrorType::kWrongSpatialRelation: {
      for (Offset off : kNeighbours) {
        if (!in_bounds(step.target_cell + off)) continue;
        PrimitiveStep s = step;
        s.relation_offset = {step.relation_offset.drow + off.drow,
                             step.relation_offset.dcol + off.dcol};
        out.push_back(s);
      }
      break;
    }
  }
  if (!out.empty()) {
    std::rotate(out.begin(), out.begin() + rng.below(out.size()), out.end());
  }
  return out;
}

bool applicable(ErrorType type, Verb verb) {
  switch (type) {
    case ErrorType::kWrongAction: return true;
    case ErrorType::kWrongRegion: return verb == Verb::kMoveTo;
    case ErrorType::kWrongPose: return verb == Verb::kGrasp;
    case ErrorType::kWrongSpatialRelation:
      return verb == Verb::kPlace || verb == Verb::kPour;
  }
  return false;
}

}  // namespace

bool in_bounds(Cell cell) {
  return cell.row >= 0 && cell.row < kGridSize && cell.col >= 0 &&
         cell.col < kGridSize;
}

Cell operator+(Cell cell, Offset offset) {
  return {cell.row + offset.drow, cell.col + offset.dcol};
}

int region_of(Cell cell) {
  if (!in_bounds(cell)) {
    fail(ErrorCode::kOutOfBounds, "cell " + cell_str(cell) + " outside 8x8 grid");
  }
  return (cell.row / 2) * kRegionGrid + cell.col / 2;
}

bool is_graspable(ObjectKind kind) {
  return kind == ObjectKind::kCup || kind == ObjectKind::kKettle ||
         kind == ObjectKind::kGearGood || kind == ObjectKind::kGearDefective;
}

bool is_container(ObjectKind kind) {
  return kind == ObjectKind::kBin || kind == ObjectKind::kConveyor;
}

std::string_view to_string(Scenario scenario) {
  return scenario == Scenario::kKitchen ? "kitchen" : "factory";
}

std::string_view to_string(ErrorType type) {
  switch (type) {
    case ErrorType::kWrongAction: return "wrong_action";
    case ErrorType::kWrongRegion: return "wrong_region";
    case ErrorType::kWrongPose: return "wrong_pose";
    case ErrorType::kWrongSpatialRelation: return "wrong_spatial_relation";
  }
  return "?";
}

std::string_view to_string(Action action) {
  switch (action) {
    case Action::kSwitchPrimitive: return "SWITCH_PRIMITIVE";
    case Action::kRetargetRegion: return "RETARGET_REGION";
    case Action::kAdjustPose: return "ADJUST_POSE";
    case Action::kAdjustRelation: return "ADJUST_RELATION";
    case Action::kContinue: return "CONTINUE";
  }
  return "?";
}

std::string_view to_string(Verb verb) {
  switch (verb) {
    case Verb::kMoveTo: return "move_to";
    case Verb::kGrasp: return "grasp";
    case Verb::kLift: return "lift";
    case Verb::kPlace: return "place";
    case Verb::kPour: return "pour";
    case Verb::kPress: return "press";
  }
  return "?";
}

std::string_view to_string(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::kCup: return "cup";
    case ObjectKind::kKettle: return "kettle";
    case ObjectKind::kPlate: return "plate";
    case ObjectKind::kStove: return "stove";
    case ObjectKind::kGearGood: return "gear_good";
    case ObjectKind::kGearDefective: return "gear_defective";
    case ObjectKind::kBin: return "bin";
    case ObjectKind::kConveyor: return "conveyor";
  }
  return "?";
}

std::string_view to_string(Color color) {
  switch (color) {
    case Color::kRed: return "red";
    case Color::kGreen: return "green";
    case Color::kBlue: return "blue";
    case Color::kNone: return "none";
  }
  return "?";
}

std::optional<Scenario> parse_scenario(std::string_view name) {
  if (name == "kitchen") return Scenario::kKitchen;
  if (name == "factory") return Scenario::kFactory;
  return std::nullopt;
}

std::optional<ErrorType> parse_error_type(std::string_view name) {
  for (int t = 0; t < kNumErrorTypes; ++t) {
    if (to_string(static_cast<ErrorType>(t)) == name) return static_cast<ErrorType>(t);
  }
  return std::nullopt;
}

Scene new_scene(Scenario scenario, std::uint64_t seed) {
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(scenario)));
  std::vector<ObjectInstance> objects;
  auto add = [&](ObjectKind kind, Color color) {
    objects.push_back({kind, color, {}, Pose::kDeg0});
  };
  if (scenario == Scenario::kKitchen) {
    add(ObjectKind::kKettle, Color::kNone);
    std::array<Color, 3> colors = {Color::kRed, Color::kGreen, Color::kBlue};
    rng.shuffle(std::span<Color>(colors));
    const std::size_t cups = 2 + rng.below(2);
    for (std::size_t k = 0; k < cups; ++k) add(ObjectKind::kCup, colors[k]);
    add(ObjectKind::kPlate, Color::kNone);
    add(ObjectKind::kStove, Color::kNone);
  } else {
    add(ObjectKind::kGearDefective, Color::kNone);
    const std::size_t good = 1 + rng.below(2);
    for (std::size_t k = 0; k < good; ++k) add(ObjectKind::kGearGood, Color::kNone);
    add(ObjectKind::kBin, Color::kNone);
    add(ObjectKind::kConveyor, Color::kNone);
  }

  std::array<int, kNumRegions> regions{};
  for (int r = 0; r < kNumRegions; ++r) regions[r] = r;
  rng.shuffle(std::span<int>(regions));
  std::size_t next_region = 0;
  for (ObjectInstance& obj : objects) {
    obj.cell = random_cell_in_region(regions[next_region++], rng);
    if (is_graspable(obj.kind)) obj.required_pose = static_cast<Pose>(rng.below(4));
  }

  Scene scene;
  scene.scenario = scenario;
  scene.objects = std::move(objects);
  scene.robot.gripper_cell = random_cell_in_region(regions[next_region], rng);
  return scene;
}

void validate_scene(const Scene& scene) {
  std::array<int, kNumObjectKinds> counts{};
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const ObjectInstance& obj = scene.objects[i];
    if (!in_bounds(obj.cell)) {
      fail(ErrorCode::kMalformedScene,
           std::string(to_string(obj.kind)) + " at " + cell_str(obj.cell));
    }
    if (obj.kind == ObjectKind::kCup && obj.color == Color::kNone) {
      fail(ErrorCode::kMalformedScene, "cup without color");
    }
    if ((obj.kind == ObjectKind::kBin || obj.kind == ObjectKind::kStove ||
         obj.kind == ObjectKind::kConveyor) &&
        obj.color != Color::kNone) {
      fail(ErrorCode::kMalformedScene,
           std::string(to_string(obj.kind)) + " must not have a color");
    }
    if (scene.robot.held == i) continue;
    for (std::size_t j = 0; j < i; ++j) {
      if (scene.robot.held == j || scene.objects[j].cell != obj.cell) continue;
      if (!is_container(obj.kind) && !is_container(scene.objects[j].kind)) {
        fail(ErrorCode::kMalformedScene, "two objects at " + cell_str(obj.cell));
      }
    }
    ++counts[static_cast<int>(obj.kind)];
  }
  if (scene.robot.held) {
    if (*scene.robot.held >= scene.objects.size() ||
        scene.objects[*scene.robot.held].cell != scene.robot.gripper_cell) {
      fail(ErrorCode::kMalformedScene, "held object is not at the gripper");
    }
    ++counts[static_cast<int>(scene.objects[*scene.robot.held].kind)];
  }
  auto need = [&](ObjectKind kind, int n) {
    if (counts[static_cast<int>(kind)] < n) {
      fail(ErrorCode::kMalformedScene, "missing " + std::string(to_string(kind)));
    }
  };
  if (scene.scenario == Scenario::kKitchen) {
    need(ObjectKind::kKettle, 1);
    need(ObjectKind::kCup, 2);
    need(ObjectKind::kPlate, 1);
    need(ObjectKind::kStove, 1);
    std::array<int, 4> cup_colors{};
    for (const ObjectInstance& obj : scene.objects) {
      if (obj.kind == ObjectKind::kCup && ++cup_colors[static_cast<int>(obj.color)] > 1) {
        fail(ErrorCode::kMalformedScene, "two cups share a color");
      }
    }
  } else {
    need(ObjectKind::kGearDefective, 1);
    need(ObjectKind::kGearGood, 1);
    need(ObjectKind::kBin, 1);
    need(ObjectKind::kConveyor, 1);
  }
}

TaskScript script_task(const Scene& scene) {
  validate_scene(scene);
  TaskScript script;
  script.scenario = scene.scenario;
  if (scene.scenario == Scenario::kKitchen) {
    const std::size_t kettle = *find_kind(scene, ObjectKind::kKettle);
    const std::size_t cup = *find_kind(scene, ObjectKind::kCup);
    const Cell k = scene.objects[kettle].cell;
    const Cell c = scene.objects[cup].cell;
    script.goal = Goal::kServeWater;
    script.goal_object = cup;
    script.tool_object = kettle;
    script.steps = {
        {Verb::kMoveTo, k, Pose::kDeg0, {}},
        {Verb::kGrasp, k, scene.objects[kettle].required_pose, {}},
        {Verb::kLift, k, Pose::kDeg0, {}},
        {Verb::kMoveTo, c, Pose::kDeg0, {}},
        {Verb::kPour, c, Pose::kDeg0, {0, 0}},
    };
  } else {
    const std::size_t gear = *find_kind(scene, ObjectKind::kGearDefective);
    const std::size_t bin = *find_kind(scene, ObjectKind::kBin);
    const Cell g = scene.objects[gear].cell;
    const Cell b = scene.objects[bin].cell;
    script.goal = Goal::kDiscardDefectiveGear;
    script.goal_object = gear;
    script.tool_object = bin;
    script.steps = {
        {Verb::kMoveTo, g, Pose::kDeg0, {}},
        {Verb::kGrasp, g, scene.objects[gear].required_pose, {}},
        {Verb::kLift, g, Pose::kDeg0, {}},
        {Verb::kMoveTo, b, Pose::kDeg0, {}},
        {Verb::kPlace, b, Pose::kDeg0, {0, 0}},
    };
  }
  return script;
}

void apply_step(Scene& state, const PrimitiveStep& step) {
  RobotState& robot = state.robot;
  switch (step.verb) {
    case Verb::kMoveTo:
      // Moving an object that was never lifted drops it where it stands.
      if (robot.held && !robot.lifted) robot.held.reset();
      robot.gripper_cell = step.target_cell;
      if (robot.held) state.objects[*robot.held].cell = step.target_cell;
      break;
    case Verb::kGrasp: {
      robot.gripper_pose = step.pose;
      if (robot.held) break;
      const auto obj = resting_at(state, robot.gripper_cell);
      if (obj && is_graspable(state.objects[*obj].kind) &&
          state.objects[*obj].required_pose == step.pose) {
        robot.held = obj;
        robot.lifted = false;
      }
      break;
    }
    case Verb::kLift:
      if (robot.held) robot.lifted = true;
      break;
    case Verb::kPlace: {
      if (!robot.held || !robot.lifted) break;
      const Cell dest = robot.gripper_cell + step.relation_offset;
      if (!in_bounds(dest)) break;
      const auto occupant = resting_at(state, dest);
      if (occupant && !is_container(state.objects[*occupant].kind)) break;
      state.objects[*robot.held].cell = dest;
      robot.gripper_cell = dest;
      robot.held.reset();
      robot.lifted = false;
      break;
    }
    case Verb::kPour: {
      if (!robot.held || !robot.lifted ||
          state.objects[*robot.held].kind != ObjectKind::kKettle) {
        break;
      }
      const Cell dest = robot.gripper_cell + step.relation_offset;
      if (in_bounds(dest)) state.last_pour = dest;
      break;
    }
    case Verb::kPress:
      break;
  }
}

bool goal_satisfied(const TaskScript& script, const Scene& state) {
  const ObjectInstance& goal = state.objects.at(script.goal_object);
  const ObjectInstance& tool = state.objects.at(script.tool_object);
  if (script.goal == Goal::kServeWater) {
    return state.last_pour == goal.cell && state.robot.held == script.tool_object;
  }
  return goal.cell == tool.cell && !state.robot.held;
}

PrimitiveStep corrected_step(const Scene& state, const TaskScript& script,
                             const ErrorSpec& error, const Correction& correction) {
  const PrimitiveStep& scripted = script.steps.at(error.step_index);
  PrimitiveStep step = error.corrupted_step;
  switch (correction.action) {
    case Action::kSwitchPrimitive:
      step.verb = scripted.verb;
      break;
    case Action::kRetargetRegion: {
      if (correction.region < 0 || correction.region >= kNumRegions) {
        fail(ErrorCode::kOutOfBounds,
             "region " + std::to_string(correction.region));
      }
      const auto intended = resting_at(state, scripted.target_cell);
      const int r0 = (correction.region / kRegionGrid) * 2;
      const int c0 = (correction.region % kRegionGrid) * 2;
      // All four cells of a 2x2 block are equally central, so the row-major
      // scan order is the tie-break.
      Cell chosen{r0, c0};
      for (int k = 0; k < 4; ++k) {
        const Cell cell{r0 + k / 2, c0 + k % 2};
        const auto obj = resting_at(state, cell);
        if (obj && (!intended ||
                    state.objects[*obj].kind == state.objects[*intended].kind)) {
          chosen = cell;
          break;
        }
      }
      step.target_cell = chosen;
      break;
    }
    case Action::kAdjustPose: {
      const auto obj = resting_at(state, step.target_cell);
      if (obj && is_graspable(state.objects[*obj].kind)) {
        step.pose = state.objects[*obj].required_pose;
      }
      break;
    }
    case Action::kAdjustRelation:
      step.relation_offset = scripted.relation_offset;
      break;
    case Action::kContinue:
      break;
  }
  return step;
}

Outcome execute(const Scene& initial, const TaskScript& script,
                const ErrorSpec* error, const Correction* correction) {
  Scene state = initial;
  for (std::size_t i = 0; i < script.steps.size(); ++i) {
    PrimitiveStep step = script.steps[i];
    if (error && i == error->step_index) {
      step = correction ? corrected_step(state, script, *error, *correction)
                        : error->corrupted_step;
    }
    apply_step(state, step);
  }
  const bool ok = goal_satisfied(script, state);
  return {ok, std::move(state)};
}

Scene state_before_step(const Scene& initial, const TaskScript& script,
                        const ErrorSpec* error, std::size_t step_index) {
  Scene state = initial;
  for (std::size_t i = 0; i < step_index && i < script.steps.size(); ++i) {
    apply_step(state, error && i == error->step_index ? error->corrupted_step
                                                      : script.steps[i]);
  }
  return state;
}

ErrorSpec inject_error(const Scene& scene, const TaskScript& script,
                       ErrorType type, std::uint64_t seed) {
  std::vector<std::size_t> steps;
  for (std::size_t i = 0; i < script.steps.size(); ++i) {
    if (applicable(type, script.steps[i].verb)) steps.push_back(i);
  }
  if (steps.empty()) {
    fail(ErrorCode::kNotApplicable,
         "script has no step admitting " + std::string(to_string(type)));
  }
  Rng rng(seed);
  const std::size_t start = rng.below(steps.size());
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const std::size_t index = steps[(start + k) % steps.size()];
    const Scene onset = state_before_step(scene, script, nullptr, index);
    for (const PrimitiveStep& candidate :
         candidates_for(onset, script.steps[index], type, rng)) {
      ErrorSpec error{type, index, candidate};
      if (!execute(scene, script, &error).success) return error;
    }
  }
  fail(ErrorCode::kNotApplicable,
       "no " + std::string(to_string(type)) + " corruption makes the task fail");
}

nn::Tensor render(const Scene& scene) {
  nn::Tensor frame({kFrameChannels, kGridSize, kGridSize});
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) {
      const auto obj = resting_at(scene, {r, c});
      if (!obj) continue;
      const ObjectInstance& o = scene.objects[*obj];
      frame.at(static_cast<std::size_t>(o.kind), r, c) = 1.0;
      if (o.color != Color::kNone) {
        frame.at(8 + static_cast<std::size_t>(o.color), r, c) = 1.0;
      }
    }
  }
  const Cell g = scene.robot.gripper_cell;
  frame.at(11, g.row, g.col) = 1.0;
  if (scene.robot.held) frame.at(12, g.row, g.col) = 1.0;
  return frame;
}

Cell error_cell(const TaskScript& script, const ErrorSpec& error) {
  const PrimitiveStep& scripted = script.steps.at(error.step_index);
  if (error.error_type == ErrorType::kWrongSpatialRelation) {
    return scripted.target_cell + error.corrupted_step.relation_offset;
  }
  return scripted.target_cell;
}

Trial make_trial(Scenario scenario, ErrorType type, std::uint64_t seed) {
  Trial trial;
  trial.scenario = scenario;
  trial.seed = seed;
  trial.scene = new_scene(scenario, mix_seed(seed, 0));
  trial.script = script_task(trial.scene);
  trial.error = inject_error(trial.scene, trial.script, type, mix_seed(seed, 1));
  trial.alert_frame = render(
      state_before_step(trial.scene, trial.script, &trial.error, trial.error.step_index));
  trial.truth_region = region_of(error_cell(trial.script, trial.error));
  trial.truth_error_type = static_cast<int>(type);
  trial.truth_action = static_cast<int>(type);
  return trial;
}

std::string to_ascii(const Scene& scene) {
  static constexpr char kKindLetters[] = "ckpsgdbv";
  static constexpr char kColorLetters[] = "rgb.";
  std::string out;
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) {
      if (c) out += ' ';
      const auto obj = resting_at(scene, {r, c});
      out += obj ? kKindLetters[static_cast<int>(scene.objects[*obj].kind)] : '.';
      out += obj ? kColorLetters[static_cast<int>(scene.objects[*obj].color)] : '.';
      if (scene.robot.gripper_cell == Cell{r, c}) {
        out += scene.robot.held ? '@' : 'G';
      } else {
        out += '.';
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace h2r::sim
