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

#include "model/training.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "nn/checkpoint.hpp"
#include "nn/optim.hpp"

namespace h2r::model {

namespace {

Labels labels_of(const Sample& s) {
  return Labels{s.truth_region, s.truth_error_type, s.truth_action};
}

}  // namespace

void train(H2RatModel& model, std::span<const Sample> data, const TrainOptions& options,
           const EpochCallback& on_epoch) {
  if (data.empty()) fail(ErrorCode::kEmptyDataset, "training needs at least one trial");
  if (options.batch < 1) fail(ErrorCode::kUsage, "batch size must be at least 1");
  if (options.epochs < 0) fail(ErrorCode::kUsage, "epochs must be nonnegative");

  const std::vector<nn::Parameter*> params = model.parameters();
  nn::Adam adam({.lr = options.lr});
  Rng shuffler(mix_seed(options.seed, 1));
  const LossWeights weights{1.0, 1.0, 1.0, options.attention_weight};
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    shuffler.shuffle(std::span<std::size_t>(order));
    EpochReport report;
    report.epoch = epoch;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(options.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(options.batch));
      const double scale = 1.0 / static_cast<double>(end - start);
      model.zero_grad();
      for (std::size_t b = start; b < end; ++b) {
        const Sample& s = data[order[b]];
        const ForwardOutputs out = model.forward(s.tokens, s.frame);
        const Labels labels = labels_of(s);
        report.loss += loss(out, labels, weights);
        report.attention_acc += argmax(out.p2.p.data()) == s.truth_region;
        report.region_acc += argmax(out.region_logits.data()) == s.truth_region;
        report.error_type_acc += argmax(out.type_logits.data()) == s.truth_error_type;
        report.action_acc += argmax(out.action_logits.data()) == s.truth_action;
        model.backward(out, labels, weights, scale);
      }
      adam.step(params);
    }
    const double n = static_cast<double>(data.size());
    report.loss /= n;
    report.attention_acc /= n;
    report.region_acc /= n;
    report.error_type_acc /= n;
    report.action_acc /= n;
    if (on_epoch) on_epoch(report);
  }
}

Metrics evaluate(const H2RatModel& model, std::span<const Sample> data, bool oracle) {
  if (data.empty()) fail(ErrorCode::kEmptyDataset, "evaluation needs at least one trial");
  Metrics m;
  m.n = data.size();
  for (const Sample& s : data) {
    const sim::Trial trial = reconstruct_trial(s);
    const ForwardOutputs out = model.forward(s.tokens, s.frame);
    const CorrectionRecommendation rec = recommend_action(out);
    m.attention_transfer_acc += rec.target_region == s.truth_region;
    m.top_action_prob += rec.probs[static_cast<std::size_t>(rec.chosen)];
    m.error_type_acc += argmax(out.type_logits.data()) == s.truth_error_type;
    m.action_acc += rec.chosen == s.truth_action;
    const sim::Correction correction =
        oracle ? sim::Correction{static_cast<sim::Action>(s.truth_action), s.truth_region}
               : sim::Correction{static_cast<sim::Action>(rec.chosen), rec.target_region};
    m.failure_avoidance_sim +=
        sim::execute(trial.scene, trial.script, &trial.error, &correction).success;
  }
  const double n = static_cast<double>(m.n);
  m.attention_transfer_acc /= n;
  m.top_action_prob /= n;
  m.failure_avoidance_sim /= n;
  m.error_type_acc /= n;
  m.action_acc /= n;
  m.failure_avoidance_product = m.attention_transfer_acc * m.top_action_prob;
  return m;
}

nlohmann::ordered_json metrics_to_json(const Metrics& m, std::string_view checkpoint_hash) {
  return {{"attention_transfer_acc", m.attention_transfer_acc},
          {"top_action_prob", m.top_action_prob},
          {"failure_avoidance_sim", m.failure_avoidance_sim},
          {"failure_avoidance_product", m.failure_avoidance_product},
          {"error_type_acc", m.error_type_acc},
          {"action_acc", m.action_acc},
          {"n", m.n},
          {"checkpoint_hash", checkpoint_hash}};
}

std::string save_checkpoint(const H2RatModel& model, std::string_view vocab_hash,
                            std::uint64_t seed, int epoch) {
  nn::CheckpointMetadata meta;
  meta.vocab_hash = vocab_hash;
  meta.config = model.config().to_json();
  meta.seed = seed;
  meta.epoch = epoch;
  const std::vector<const nn::Parameter*> params = model.parameters();
  return nn::serialize_checkpoint(params, meta);
}

H2RatModel load_checkpoint(std::string_view text, std::string_view expected_vocab_hash) {
  const nn::Checkpoint ckpt = nn::parse_checkpoint(text);
  if (ckpt.metadata.vocab_hash != expected_vocab_hash) {
    fail(ErrorCode::kCheckpointMismatch, "checkpoint vocabulary hash " +
                                             ckpt.metadata.vocab_hash + " differs from " +
                                             std::string(expected_vocab_hash));
  }
  H2RatModel model(ModelConfig::from_json(ckpt.metadata.config), 0);
  const std::vector<nn::Parameter*> params = model.parameters();
  nn::restore_parameters(ckpt, params);
  return model;
}

std::string checkpoint_hash(std::string_view text) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

}  // namespace h2r::model
