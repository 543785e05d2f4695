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

#include "h2rat/h2rat.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "common/error.hpp"
#include "corpus/alerts.hpp"
#include "model/dataset.hpp"
#include "model/training.hpp"
#include "sim/scene.hpp"
#include "trust/trust.hpp"

struct h2rat_model {
  h2r::model::H2RatModel model;
  std::string checkpoint_hash;
};

struct h2rat_trial {
  const h2rat_model* owner = nullptr;
  h2r::sim::Trial trial;
  std::string generated_alert;
  std::optional<h2r::model::ForwardOutputs> outputs;
  h2r::model::CorrectionRecommendation recommendation;
};

namespace {

thread_local std::string g_last_error;

h2rat_status status_of(h2r::ErrorCode code) {
  using h2r::ErrorCode;
  switch (code) {
    case ErrorCode::kUsage:
      return H2RAT_ERR_USAGE;
    case ErrorCode::kIo:
      return H2RAT_ERR_IO;
    case ErrorCode::kMalformedData:
    case ErrorCode::kEmptyDataset:
    case ErrorCode::kNoRecords:
      return H2RAT_ERR_MALFORMED;
    case ErrorCode::kCheckpointMismatch:
      return H2RAT_ERR_CHECKPOINT;
    default:
      return H2RAT_ERR_INVALID;
  }
}

template <typename Fn>
h2rat_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return H2RAT_OK;
  } catch (const h2r::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return H2RAT_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return H2RAT_ERR_INTERNAL;
  }
}

void require(bool condition, const std::string& message) {
  if (!condition) h2r::fail(h2r::ErrorCode::kUsage, message);
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::ofstream open_output(const char* path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) h2r::fail(h2r::ErrorCode::kIo, std::string("cannot write ") + path);
  return out;
}

void finish_output(std::ofstream& out, const char* path) {
  if (!out.flush()) h2r::fail(h2r::ErrorCode::kIo, std::string("write failed for ") + path);
}

std::string read_file(const char* path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) h2r::fail(h2r::ErrorCode::kIo, std::string("cannot open ") + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

h2r::sim::ErrorType error_type_of_case(int case_id) {
  require(case_id >= 1 && case_id <= h2r::sim::kNumErrorTypes,
          "case must be 1..4, got " + std::to_string(case_id));
  return static_cast<h2r::sim::ErrorType>(case_id - 1);
}

std::string describe(const h2r::sim::PrimitiveStep& step) {
  std::ostringstream out;
  out << h2r::sim::to_string(step.verb) << " at (" << step.target_cell.row << ","
      << step.target_cell.col << ") pose " << static_cast<int>(step.pose) * 90;
  if (step.relation_offset != h2r::sim::Offset{}) {
    out << " offset (" << step.relation_offset.drow << "," << step.relation_offset.dcol << ")";
  }
  return out.str();
}

}  // namespace

extern "C" {

const char* h2rat_version(void) { return "0.1.0"; }

const char* h2rat_last_error(void) { return g_last_error.c_str(); }

void h2rat_string_free(char* s) { std::free(s); }

const char* h2rat_action_name(int action) {
  if (action < 0 || action >= h2r::sim::kNumActions) return nullptr;
  return h2r::sim::to_string(static_cast<h2r::sim::Action>(action)).data();
}

h2rat_status h2rat_gen_data(const char* scenario, const int* cases, size_t n_cases, int n,
                            uint64_t seed, const char* out_path) {
  return guarded([&] {
    require(scenario && out_path && (cases || n_cases == 0), "gen-data: null argument");
    require(n >= 1, "gen-data: --n must be at least 1");
    require(n_cases >= 1, "gen-data: at least one case is required");
    h2r::model::GenerateOptions options;
    const std::string name = scenario;
    if (name == "both") {
      options.scenarios = {h2r::sim::Scenario::kKitchen, h2r::sim::Scenario::kFactory};
    } else {
      const auto parsed = h2r::sim::parse_scenario(name);
      require(parsed.has_value(), "unknown scenario '" + name + "'");
      options.scenarios = {*parsed};
    }
    options.cases.clear();
    for (size_t i = 0; i < n_cases; ++i) options.cases.push_back(error_type_of_case(cases[i]));
    options.n = n;
    options.seed = seed;
    std::ofstream out = open_output(out_path);
    for (const auto& sample : h2r::model::generate_dataset(options)) {
      out << h2r::model::to_json_line(sample) << '\n';
    }
    finish_output(out, out_path);
  });
}

h2rat_status h2rat_train(const char* data_path, const h2rat_train_options* options,
                         const char* out_path, h2rat_epoch_callback on_epoch, void* user_data) {
  return guarded([&] {
    require(data_path && options && out_path, "train: null argument");
    require(options->epochs >= 0, "train: --epochs must be nonnegative");
    require(options->batch >= 1, "train: --batch must be at least 1");
    require(options->lr > 0.0, "train: --lr must be positive");
    const auto& vocab = h2r::corpus::builtin_vocab();
    const auto data = h2r::model::read_dataset(std::string(data_path), vocab.size());
    if (data.empty()) h2r::fail(h2r::ErrorCode::kEmptyDataset, std::string(data_path) + " has no trials");
    std::ofstream out = open_output(out_path);

    h2r::model::ModelConfig config;
    config.vocab_size = static_cast<int>(vocab.size());
    h2r::model::H2RatModel model(config, options->seed);
    h2r::model::TrainOptions train_options;
    train_options.epochs = options->epochs;
    train_options.lr = options->lr;
    train_options.batch = options->batch;
    train_options.seed = options->seed;
    h2r::model::train(model, data, train_options, [&](const h2r::model::EpochReport& r) {
      if (!on_epoch) return;
      const h2rat_epoch_stats stats{r.epoch, r.loss, r.attention_acc, r.region_acc,
                                    r.error_type_acc, r.action_acc};
      on_epoch(&stats, user_data);
    });
    out << h2r::model::save_checkpoint(model, vocab.hash(), options->seed, options->epochs);
    finish_output(out, out_path);
  });
}

h2rat_status h2rat_model_load(const char* path, h2rat_model** out) {
  return guarded([&] {
    require(path && out, "model_load: null argument");
    *out = nullptr;
    const std::string text = read_file(path);
    auto model = h2r::model::load_checkpoint(text, h2r::corpus::builtin_vocab().hash());
    *out = new h2rat_model{std::move(model), h2r::model::checkpoint_hash(text)};
  });
}

void h2rat_model_free(h2rat_model* model) { delete model; }

h2rat_status h2rat_evaluate(const h2rat_model* model, const char* data_path, int oracle,
                            char** metrics_json) {
  return guarded([&] {
    require(model && data_path && metrics_json, "evaluate: null argument");
    *metrics_json = nullptr;
    const auto data = h2r::model::read_dataset(std::string(data_path),
                                               h2r::corpus::builtin_vocab().size());
    const auto metrics = h2r::model::evaluate(model->model, data, oracle != 0);
    *metrics_json =
        copy_string(h2r::model::metrics_to_json(metrics, model->checkpoint_hash).dump());
  });
}

h2rat_status h2rat_trial_create(const h2rat_model* model, const char* scenario, int case_id,
                                uint64_t seed, h2rat_trial** out) {
  return guarded([&] {
    require(model && scenario && out, "trial_create: null argument");
    *out = nullptr;
    const auto parsed = h2r::sim::parse_scenario(scenario);
    require(parsed.has_value(), std::string("unknown scenario '") + scenario + "'");
    auto trial = std::make_unique<h2rat_trial>();
    trial->owner = model;
    trial->trial = h2r::sim::make_trial(*parsed, error_type_of_case(case_id), seed);
    trial->generated_alert = h2r::corpus::generate_alert(trial->trial, seed).text;
    *out = trial.release();
  });
}

void h2rat_trial_free(h2rat_trial* trial) { delete trial; }

size_t h2rat_trial_step_count(const h2rat_trial* trial) {
  return trial ? trial->trial.script.steps.size() : 0;
}

size_t h2rat_trial_error_step(const h2rat_trial* trial) {
  return trial ? trial->trial.error.step_index : 0;
}

h2rat_status h2rat_trial_board(const h2rat_trial* trial, size_t step, char** board) {
  return guarded([&] {
    require(trial && board, "trial_board: null argument");
    require(step < trial->trial.script.steps.size(), "trial_board: step out of range");
    const auto& t = trial->trial;
    *board = copy_string(h2r::sim::to_ascii(
        h2r::sim::state_before_step(t.scene, t.script, &t.error, step)));
  });
}

h2rat_status h2rat_trial_describe_step(const h2rat_trial* trial, size_t step, char** text) {
  return guarded([&] {
    require(trial && text, "trial_describe_step: null argument");
    const auto& t = trial->trial;
    require(step < t.script.steps.size(), "trial_describe_step: step out of range");
    *text = copy_string(describe(step == t.error.step_index ? t.error.corrupted_step
                                                            : t.script.steps[step]));
  });
}

h2rat_status h2rat_trial_generated_alert(const h2rat_trial* trial, char** text) {
  return guarded([&] {
    require(trial && text, "trial_generated_alert: null argument");
    *text = copy_string(trial->generated_alert);
  });
}

h2rat_status h2rat_trial_infer(h2rat_trial* trial, const char* alert_text) {
  return guarded([&] {
    require(trial != nullptr, "trial_infer: null trial");
    std::string text = alert_text ? alert_text : "";
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) text = trial->generated_alert;
    const auto tokens = h2r::corpus::tokenize(text, h2r::corpus::builtin_vocab());
    trial->outputs = trial->owner->model.forward(tokens, trial->trial.alert_frame);
    trial->recommendation = h2r::model::recommend_action(*trial->outputs);
  });
}

h2rat_status h2rat_trial_attention(const h2rat_trial* trial, int layer, double out[16]) {
  return guarded([&] {
    require(trial && out, "trial_attention: null argument");
    require(trial->outputs.has_value(), "trial_attention: call infer first");
    require(layer == 1 || layer == 2, "trial_attention: layer must be 1 or 2");
    const auto& p = layer == 1 ? trial->outputs->p1.p : trial->outputs->p2.p;
    for (size_t i = 0; i < p.size(); ++i) out[i] = p[i];
  });
}

h2rat_status h2rat_trial_recommendation(const h2rat_trial* trial, h2rat_recommendation* out) {
  return guarded([&] {
    require(trial && out, "trial_recommendation: null argument");
    require(trial->outputs.has_value(), "trial_recommendation: call infer first");
    const auto& r = trial->recommendation;
    for (size_t i = 0; i < 5; ++i) out->probs[i] = r.probs[i];
    out->chosen = r.chosen;
    out->target_region = r.target_region;
  });
}

h2rat_status h2rat_trial_apply(h2rat_trial* trial, int* success, char** final_board) {
  return guarded([&] {
    require(trial && success, "trial_apply: null argument");
    require(trial->outputs.has_value(), "trial_apply: call infer first");
    const auto& t = trial->trial;
    const h2r::sim::Correction correction{
        static_cast<h2r::sim::Action>(trial->recommendation.chosen),
        trial->recommendation.target_region};
    const auto outcome = h2r::sim::execute(t.scene, t.script, &t.error, &correction);
    *success = outcome.success ? 1 : 0;
    if (final_board) *final_board = copy_string(h2r::sim::to_ascii(outcome.final_state));
  });
}

h2rat_status h2rat_trust_synth(const char* profile, int n, uint64_t seed, const char* out_path) {
  return guarded([&] {
    require(profile && out_path, "trust synth: null argument");
    require(std::string(profile) == "paper", std::string("unknown profile '") + profile + "'");
    require(n >= 1, "trust synth: --n must be at least 1");
    std::ofstream out = open_output(out_path);
    h2r::trust::write_records(out, h2r::trust::synth_cohort(n, seed));
    finish_output(out, out_path);
  });
}

h2rat_status h2rat_trust_analyze(const char* records_path, double t_init, const char* curves_dir,
                                 char** report_json) {
  return guarded([&] {
    require(records_path && report_json, "trust analyze: null argument");
    *report_json = nullptr;
    std::ifstream in(records_path);
    if (!in) h2r::fail(h2r::ErrorCode::kIo, std::string("cannot open ") + records_path);
    const auto records = h2r::trust::read_records(in);
    const std::string report = h2r::trust::analyze(records, t_init).dump(2);
    if (curves_dir) {
      std::error_code ec;
      std::filesystem::create_directories(curves_dir, ec);
      if (ec) h2r::fail(h2r::ErrorCode::kIo, std::string("cannot create ") + curves_dir);
      const std::filesystem::path dir(curves_dir);
      const std::string report_path = (dir / "report.json").string();
      std::ofstream rep = open_output(report_path.c_str());
      rep << report << '\n';
      finish_output(rep, report_path.c_str());
      for (int c = 1; c <= h2r::trust::kCases; ++c) {
        for (auto phase : {h2r::trust::Phase::kBefore, h2r::trust::Phase::kAfter}) {
          std::vector<int> levels;
          for (const auto& r : records) {
            if (r.case_id == c && r.phase == phase) levels.push_back(r.level);
          }
          if (levels.empty()) continue;
          const std::string path = (dir / ("curve_case" + std::to_string(c) + "_" +
                                           std::string(h2r::trust::to_string(phase)) + ".csv"))
                                       .string();
          std::ofstream csv = open_output(path.c_str());
          csv << h2r::trust::curve_csv(h2r::trust::histogram_of(levels));
          finish_output(csv, path.c_str());
        }
      }
    }
    *report_json = copy_string(report);
  });
}

h2rat_status h2rat_trust_append(const char* log_path, int case_id, int before, int after,
                                int* participant_id) {
  return guarded([&] {
    require(log_path != nullptr, "trust append: null path");
    require(case_id >= 1 && case_id <= h2r::trust::kCases, "trust append: case must be 1..4");
    require(before >= 1 && before <= 5 && after >= 1 && after <= 5,
            "trust append: levels must be 1..5");
    int next_id = 1;
    bool needs_header = true;
    {
      std::ifstream in(log_path);
      if (in && in.peek() != std::ifstream::traits_type::eof()) {
        for (const auto& r : h2r::trust::read_records(in)) next_id = std::max(next_id, r.participant_id + 1);
        needs_header = false;
      }
    }
    std::ofstream out(log_path, std::ios::binary | std::ios::app);
    if (!out) h2r::fail(h2r::ErrorCode::kIo, std::string("cannot append to ") + log_path);
    const h2r::trust::TrustRecord rows[] = {{next_id, case_id, h2r::trust::Phase::kBefore, before},
                                            {next_id, case_id, h2r::trust::Phase::kAfter, after}};
    std::string csv = h2r::trust::records_to_csv(rows);
    if (!needs_header) csv.erase(0, csv.find('\n') + 1);
    out << csv;
    if (!out.flush()) h2r::fail(h2r::ErrorCode::kIo, std::string("write failed for ") + log_path);
    if (participant_id) *participant_id = next_id;
  });
}

const char* h2rat_trust_level_label(int level) {
  if (level < 1 || level > h2r::trust::kLevels) return nullptr;
  return h2r::trust::level_label(level).data();
}

}  // extern "C"
