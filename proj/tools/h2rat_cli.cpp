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

// h2rat command-line tool: dataset generation, training, evaluation,
// trial sessions and trust analysis over the h2rat C interface.

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "h2rat/h2rat.h"

namespace {

int report(h2rat_status status) {
  if (status != H2RAT_OK) std::cerr << "error: " << h2rat_last_error() << "\n";
  return static_cast<int>(status);
}

// Owns a string returned by the library.
struct LibString {
  char* ptr = nullptr;
  ~LibString() { h2rat_string_free(ptr); }
  std::string str() const { return ptr ? ptr : ""; }
};

struct ModelHandle {
  h2rat_model* ptr = nullptr;
  ~ModelHandle() { h2rat_model_free(ptr); }
};

struct TrialHandle {
  h2rat_trial* ptr = nullptr;
  ~TrialHandle() { h2rat_trial_free(ptr); }
};

std::optional<std::vector<int>> parse_cases(const std::string& text) {
  std::vector<int> cases;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    if (item.size() != 1 || item[0] < '1' || item[0] > '4') return std::nullopt;
    cases.push_back(item[0] - '0');
  }
  if (cases.empty()) return std::nullopt;
  return cases;
}

constexpr int kMaxReprompts = 3;

// Reads a trust level 1-5, re-prompting up to three times.
std::optional<int> prompt_trust(const char* when) {
  std::cout << "How much do you trust the robot " << when << "?\n";
  for (int level = 1; level <= 5; ++level) {
    std::cout << "  " << level << " " << h2rat_trust_level_label(level) << "\n";
  }
  for (int attempt = 0; attempt <= kMaxReprompts; ++attempt) {
    std::cout << "trust> " << std::flush;
    std::string line;
    if (!std::getline(std::cin, line)) return std::nullopt;
    const auto first = line.find_first_not_of(" \t\r");
    const auto last = line.find_last_not_of(" \t\r");
    const std::string value = first == std::string::npos ? "" : line.substr(first, last - first + 1);
    if (value.size() == 1 && value[0] >= '1' && value[0] <= '5') return value[0] - '0';
    std::cout << "Please enter an integer from 1 to 5.\n";
  }
  return std::nullopt;
}

void print_epoch(const h2rat_epoch_stats* s, void*) {
  char line[256];
  std::snprintf(line, sizeof line,
                "{\"epoch\":%d,\"loss\":%.6f,\"attention_acc\":%.4f,\"region_acc\":%.4f,"
                "\"error_type_acc\":%.4f,\"action_acc\":%.4f}",
                s->epoch, s->loss, s->attention_acc, s->region_acc, s->error_type_acc,
                s->action_acc);
  std::cout << line << std::endl;
}

struct TrialArgs {
  std::string model;
  std::string scenario = "kitchen";
  int case_id = 1;
  std::uint64_t seed = 0;
  bool interactive = false;
  std::string trust_log;
};

int run_trial(const TrialArgs& args) {
  ModelHandle model;
  if (auto st = h2rat_model_load(args.model.c_str(), &model.ptr); st != H2RAT_OK) return report(st);
  TrialHandle trial;
  if (auto st = h2rat_trial_create(model.ptr, args.scenario.c_str(), args.case_id, args.seed,
                                   &trial.ptr);
      st != H2RAT_OK) {
    return report(st);
  }
  std::cout << "trial: scenario " << args.scenario << ", case " << args.case_id << ", seed "
            << args.seed << "\n";
  std::cout << "legend: c cup, k kettle, p plate, s stove, g gear, d defective gear, b bin, "
               "v conveyor; r/g/b color; G gripper, @ gripper holding\n";
  const size_t error_step = h2rat_trial_error_step(trial.ptr);
  for (size_t step = 0; step <= error_step; ++step) {
    LibString desc, board;
    h2rat_trial_describe_step(trial.ptr, step, &desc.ptr);
    h2rat_trial_board(trial.ptr, step, &board.ptr);
    std::cout << "\nstep " << step << ": " << desc.str() << "\n" << board.str();
  }
  std::cout << "\nexecution paused at step " << error_step << "\n";

  LibString generated;
  h2rat_trial_generated_alert(trial.ptr, &generated.ptr);
  std::string alert;
  int before = 0;
  if (args.interactive) {
    std::cout << "Type your alert for the robot (empty line uses a generated alert).\nalert> "
              << std::flush;
    if (!std::getline(std::cin, alert)) {
      std::cerr << "error: no alert given\n";
      return H2RAT_ERR_ABORTED;
    }
    const auto trust = prompt_trust("before the correction");
    if (!trust) {
      std::cerr << "error: no valid trust level given\n";
      return H2RAT_ERR_ABORTED;
    }
    before = *trust;
  }
  if (alert.find_first_not_of(" \t\r") == std::string::npos) alert = generated.str();
  std::cout << "alert: " << alert << "\n";
  if (auto st = h2rat_trial_infer(trial.ptr, alert.c_str()); st != H2RAT_OK) return report(st);

  double attention[16];
  h2rat_trial_attention(trial.ptr, 2, attention);
  std::cout << "layer-2 attention (4x4 regions):\n";
  for (int r = 0; r < 4; ++r) {
    char row[64];
    std::snprintf(row, sizeof row, "%6.3f %6.3f %6.3f %6.3f\n", attention[4 * r],
                  attention[4 * r + 1], attention[4 * r + 2], attention[4 * r + 3]);
    std::cout << row;
  }
  h2rat_recommendation rec;
  h2rat_trial_recommendation(trial.ptr, &rec);
  std::cout << "action probabilities:";
  for (int a = 0; a < 5; ++a) {
    char item[64];
    std::snprintf(item, sizeof item, " %s=%.4f", h2rat_action_name(a), rec.probs[a]);
    std::cout << item;
  }
  char line[160];
  std::snprintf(line, sizeof line, "\nrecommendation: %s at region %d (row %d, column %d)\n",
                h2rat_action_name(rec.chosen), rec.target_region, rec.target_region / 4,
                rec.target_region % 4);
  std::cout << line;

  int success = 0;
  LibString final_board;
  if (auto st = h2rat_trial_apply(trial.ptr, &success, &final_board.ptr); st != H2RAT_OK) {
    return report(st);
  }
  std::cout << "outcome: " << (success ? "success" : "failure") << "\n" << final_board.str();

  if (args.interactive) {
    const auto after = prompt_trust("after the correction");
    if (!after) {
      std::cerr << "error: no valid trust level given\n";
      return H2RAT_ERR_ABORTED;
    }
    if (!args.trust_log.empty()) {
      int participant = 0;
      if (auto st = h2rat_trust_append(args.trust_log.c_str(), args.case_id, before, *after,
                                       &participant);
          st != H2RAT_OK) {
        return report(st);
      }
      std::cout << "trust recorded for participant " << participant << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"h2rat: ground spoken robot alerts in the scene, correct the error, measure trust"};
  app.require_subcommand(1);
  app.set_version_flag("--version", h2rat_version());
  std::function<int()> action;

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate a seeded trial dataset (JSON lines)");
  std::string gen_scenario = "both", gen_cases = "1,2,3,4", gen_out;
  int gen_n = 0;
  std::uint64_t gen_seed = 0;
  gen->add_option("--scenario", gen_scenario, "kitchen, factory or both")
      ->check(CLI::IsMember({"kitchen", "factory", "both"}))
      ->capture_default_str();
  gen->add_option("--cases", gen_cases, "Comma-separated error types 1-4")->capture_default_str();
  gen->add_option("--n", gen_n, "Number of trials")->required();
  gen->add_option("--seed", gen_seed, "Dataset seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output path")->required();
  gen->callback([&] {
    action = [&] {
      const auto cases = parse_cases(gen_cases);
      if (!cases) {
        std::cerr << "error: --cases must be a comma-separated list of 1-4\n";
        return static_cast<int>(H2RAT_ERR_USAGE);
      }
      return report(h2rat_gen_data(gen_scenario.c_str(), cases->data(), cases->size(), gen_n,
                                   gen_seed, gen_out.c_str()));
    };
  });

  // train
  auto* train = app.add_subcommand("train", "Train the model on a trial dataset");
  std::string train_data, train_out;
  h2rat_train_options topts{10, 1e-3, 32, 0};
  train->add_option("--data", train_data, "Trial dataset path")->required();
  train->add_option("--epochs", topts.epochs, "Training epochs")->capture_default_str();
  train->add_option("--lr", topts.lr, "Adam learning rate")->capture_default_str();
  train->add_option("--batch", topts.batch, "Mini-batch size")->capture_default_str();
  train->add_option("--seed", topts.seed, "Initialization and shuffling seed")->capture_default_str();
  train->add_option("--out", train_out, "Checkpoint output path")->required();
  train->callback([&] {
    action = [&] {
      return report(h2rat_train(train_data.c_str(), &topts, train_out.c_str(), print_epoch, nullptr));
    };
  });

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a trial dataset");
  std::string eval_data, eval_model;
  bool eval_oracle = false;
  eval->add_option("--data", eval_data, "Trial dataset path")->required();
  eval->add_option("--model", eval_model, "Checkpoint path")->required();
  eval->add_flag("--oracle", eval_oracle, "Apply ground-truth corrections instead of the model's");
  eval->callback([&] {
    action = [&] {
      ModelHandle model;
      if (auto st = h2rat_model_load(eval_model.c_str(), &model.ptr); st != H2RAT_OK) {
        return report(st);
      }
      LibString metrics;
      if (auto st = h2rat_evaluate(model.ptr, eval_data.c_str(), eval_oracle ? 1 : 0, &metrics.ptr);
          st != H2RAT_OK) {
        return report(st);
      }
      std::cout << metrics.str() << "\n";
      return 0;
    };
  });

  // trial
  auto* trial = app.add_subcommand("trial", "Run one trial session with an alert and trust prompts");
  TrialArgs trial_args;
  trial->add_option("--model", trial_args.model, "Checkpoint path")->required();
  trial->add_option("--scenario", trial_args.scenario, "kitchen or factory")
      ->check(CLI::IsMember({"kitchen", "factory"}))
      ->capture_default_str();
  trial->add_option("--case", trial_args.case_id, "Error type 1-4")
      ->check(CLI::Range(1, 4))
      ->capture_default_str();
  trial->add_option("--seed", trial_args.seed, "Trial seed")->capture_default_str();
  trial->add_flag("--interactive", trial_args.interactive,
                  "Read the alert and trust levels from standard input");
  trial->add_option("--trust-log", trial_args.trust_log,
                    "CSV to which interactive trust reports are appended");
  trial->callback([&] { action = [&] { return run_trial(trial_args); }; });

  // trust
  auto* trust = app.add_subcommand("trust", "Trust record analysis and synthesis");
  trust->require_subcommand(1);
  auto* analyze = trust->add_subcommand("analyze", "Summaries, U tests and trust curves");
  std::string records_path, analyze_out;
  double t_init = 4.5;
  analyze->add_option("--records", records_path, "Trust record CSV")->required();
  analyze->add_option("--t-init", t_init, "Initial trust level")->capture_default_str();
  analyze->add_option("--out", analyze_out, "Directory for report.json and curve CSVs");
  analyze->callback([&] {
    action = [&] {
      LibString report_json;
      if (auto st = h2rat_trust_analyze(records_path.c_str(), t_init,
                                        analyze_out.empty() ? nullptr : analyze_out.c_str(),
                                        &report_json.ptr);
          st != H2RAT_OK) {
        return report(st);
      }
      std::cout << report_json.str() << "\n";
      return 0;
    };
  });
  auto* synth = trust->add_subcommand("synth", "Synthesize a cohort matching a published profile");
  std::string profile = "paper", synth_out;
  int synth_n = 252;
  std::uint64_t synth_seed = 0;
  synth->add_option("--profile", profile, "Cohort profile (paper)")->capture_default_str();
  synth->add_option("--n", synth_n, "Participants")->capture_default_str();
  synth->add_option("--seed", synth_seed, "Sampling seed")->capture_default_str();
  synth->add_option("--out", synth_out, "Output CSV path")->required();
  synth->callback([&] {
    action = [&] {
      return report(h2rat_trust_synth(profile.c_str(), synth_n, synth_seed, synth_out.c_str()));
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return H2RAT_ERR_USAGE;
  }
  return action ? action() : static_cast<int>(H2RAT_ERR_USAGE);
}
