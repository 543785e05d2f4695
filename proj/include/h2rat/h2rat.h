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

#ifndef H2RAT_H2RAT_H_
#define H2RAT_H2RAT_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(H2RAT_BUILDING_LIBRARY)
#define H2RAT_API __declspec(dllexport)
#else
#define H2RAT_API __declspec(dllimport)
#endif
#else
#define H2RAT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as the command-line exit codes. */
typedef enum h2rat_status {
  H2RAT_OK = 0,
  H2RAT_ERR_USAGE = 2,
  H2RAT_ERR_IO = 3,
  H2RAT_ERR_MALFORMED = 4,
  H2RAT_ERR_CHECKPOINT = 5,
  H2RAT_ERR_ABORTED = 6,
  H2RAT_ERR_INVALID = 7,
  H2RAT_ERR_INTERNAL = 8
} h2rat_status;

H2RAT_API const char* h2rat_version(void);

/* Message of the most recent failure on the calling thread ("" if none). */
H2RAT_API const char* h2rat_last_error(void);

/* Releases strings returned through char** out-parameters. */
H2RAT_API void h2rat_string_free(char* s);

/* Name of a correction action 0..4, or NULL. */
H2RAT_API const char* h2rat_action_name(int action);

/* ---- Datasets ---------------------------------------------------------- */

/* scenario: "kitchen", "factory" or "both"; cases: error types 1..4
 * (1 wrong action, 2 wrong region, 3 wrong pose, 4 wrong spatial relation).
 * Writes n trial lines to out_path. */
H2RAT_API h2rat_status h2rat_gen_data(const char* scenario, const int* cases, size_t n_cases,
                                      int n, uint64_t seed, const char* out_path);

/* ---- Training ---------------------------------------------------------- */

typedef struct h2rat_train_options {
  int epochs;
  double lr;
  int batch;
  uint64_t seed;
} h2rat_train_options;

typedef struct h2rat_epoch_stats {
  int epoch;
  double loss;
  double attention_acc;
  double region_acc;
  double error_type_acc;
  double action_acc;
} h2rat_epoch_stats;

typedef void (*h2rat_epoch_callback)(const h2rat_epoch_stats* stats, void* user_data);

/* Trains from a trial file and writes the checkpoint to out_path. The
 * callback, if any, runs once per epoch. */
H2RAT_API h2rat_status h2rat_train(const char* data_path, const h2rat_train_options* options,
                                   const char* out_path, h2rat_epoch_callback on_epoch,
                                   void* user_data);

/* ---- Models and evaluation -------------------------------------------- */

typedef struct h2rat_model h2rat_model;

H2RAT_API h2rat_status h2rat_model_load(const char* path, h2rat_model** out);
H2RAT_API void h2rat_model_free(h2rat_model* model);

/* Metrics JSON for the trials in data_path. A nonzero oracle flag applies the
 * ground-truth correction instead of the recommendation. */
H2RAT_API h2rat_status h2rat_evaluate(const h2rat_model* model, const char* data_path,
                                      int oracle, char** metrics_json);

/* ---- Interactive trials ----------------------------------------------- */

typedef struct h2rat_trial h2rat_trial;

typedef struct h2rat_recommendation {
  double probs[5];
  int chosen;
  int target_region;
} h2rat_recommendation;

/* case_id 1..4 selects the injected error type. The model must outlive the
 * trial. */
H2RAT_API h2rat_status h2rat_trial_create(const h2rat_model* model, const char* scenario,
                                          int case_id, uint64_t seed, h2rat_trial** out);
H2RAT_API void h2rat_trial_free(h2rat_trial* trial);

H2RAT_API size_t h2rat_trial_step_count(const h2rat_trial* trial);
/* Index of the erroneous step, where execution pauses for the alert. */
H2RAT_API size_t h2rat_trial_error_step(const h2rat_trial* trial);

/* Board at the onset of `step`, and a one-line description of that step. */
H2RAT_API h2rat_status h2rat_trial_board(const h2rat_trial* trial, size_t step, char** board);
H2RAT_API h2rat_status h2rat_trial_describe_step(const h2rat_trial* trial, size_t step,
                                                 char** text);

/* Alert generated for this trial by the template corpus. */
H2RAT_API h2rat_status h2rat_trial_generated_alert(const h2rat_trial* trial, char** text);

/* Runs the model on the alert; NULL or blank text uses the generated alert. */
H2RAT_API h2rat_status h2rat_trial_infer(h2rat_trial* trial, const char* alert_text);

/* Attention over the 16 regions of layer 1 or 2 (after infer). */
H2RAT_API h2rat_status h2rat_trial_attention(const h2rat_trial* trial, int layer,
                                             double out[16]);
H2RAT_API h2rat_status h2rat_trial_recommendation(const h2rat_trial* trial,
                                                  h2rat_recommendation* out);

/* Executes the script with the recommended correction at the error step. */
H2RAT_API h2rat_status h2rat_trial_apply(h2rat_trial* trial, int* success, char** final_board);

/* ---- Trust analytics --------------------------------------------------- */

/* profile must be "paper". Writes 2 x 4 x n records as CSV. */
H2RAT_API h2rat_status h2rat_trust_synth(const char* profile, int n, uint64_t seed,
                                         const char* out_path);

/* Analysis report JSON for a record CSV. When curves_dir is not NULL the
 * report and one curve CSV per (case, phase) are also written there. */
H2RAT_API h2rat_status h2rat_trust_analyze(const char* records_path, double t_init,
                                           const char* curves_dir, char** report_json);

/* Appends a before and an after record for a new participant (one past the
 * largest id in the file) and reports that id. Creates the file if needed. */
H2RAT_API h2rat_status h2rat_trust_append(const char* log_path, int case_id, int before,
                                          int after, int* participant_id);

/* "Completely Distrust" ... "Completely Trust" for levels 1..5, or NULL. */
H2RAT_API const char* h2rat_trust_level_label(int level);

#ifdef __cplusplus
}
#endif

#endif /* H2RAT_H2RAT_H_ */
