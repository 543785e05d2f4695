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
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "corpus/alerts.hpp"
#include "model/dataset.hpp"
#include "model/h2rat.hpp"
#include "model/training.hpp"

namespace h2r::model {
namespace {

using nn::Tensor;

ModelConfig default_config() {
  ModelConfig c;
  c.vocab_size = static_cast<int>(corpus::builtin_vocab().size());
  return c;
}

std::vector<Sample> make_data(int n, std::uint64_t seed) {
  GenerateOptions o;
  o.n = n;
  o.seed = seed;
  return generate_dataset(o);
}

// Reference checkpoint: one epoch on 64 trials from dataset seed 0.
const H2RatModel& reference_model() {
  static const H2RatModel model = [] {
    H2RatModel m(default_config(), 0);
    const std::vector<Sample> data = make_data(64, 0);
    train(m, data, {.epochs = 1, .lr = 1e-3, .batch = 32, .seed = 0});
    return m;
  }();
  return model;
}

const Sample& fixture_sample() {
  static const Sample s = make_data(8, 100)[5];
  return s;
}

std::string format(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void expect_golden(std::span<const double> actual, std::initializer_list<double> expected,
                   const char* what) {
  ASSERT_GE(actual.size(), expected.size()) << what;
  std::size_t i = 0;
  for (double e : expected) {
    EXPECT_NEAR(actual[i], e, 1e-9) << what << "[" << i << "] = " << format(actual[i]);
    ++i;
  }
}

double sum(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

Tensor permute_rows(const Tensor& m, const std::vector<std::size_t>& perm) {
  Tensor out(m.shape());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    for (std::size_t c = 0; c < m.dim(1); ++c) out.at(i, c) = m.at(perm[i], c);
  }
  return out;
}

ForwardOutputs logits_only(Tensor region, Tensor type, Tensor action) {
  ForwardOutputs out;
  out.region_logits = std::move(region);
  out.type_logits = std::move(type);
  out.action_logits = std::move(action);
  return out;
}

TEST(Config, JsonRoundTrip) {
  const ModelConfig c = default_config();
  EXPECT_EQ(ModelConfig::from_json(c.to_json()), c);
}

TEST(Config, UnsupportedShapeIsCheckpointMismatch) {
  auto j = default_config().to_json();
  j["attention_layers"] = 3;
  try {
    ModelConfig::from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCheckpointMismatch);
  }
}

TEST(Model, ParameterNamesAreUnique) {
  H2RatModel m(default_config(), 0);
  std::set<std::string> names;
  for (const nn::Parameter* p : m.parameters()) EXPECT_TRUE(names.insert(p->name).second) << p->name;
  EXPECT_EQ(names.size(), 23u);
}

TEST(EncodeText, AllPadIsInputIndependentAndDeterministic) {
  const H2RatModel& m = reference_model();
  const std::vector<int> pad(corpus::kMaxTokens, corpus::kPad);
  const Tensor a = m.encode_text(pad), b = m.encode_text(pad);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.size(), 64u);
  EXPECT_NE(a, m.encode_text(fixture_sample().tokens));
}

TEST(EncodeText, OutOfVocabularyIdIsInvalidToken) {
  H2RatModel m(default_config(), 0);
  std::vector<int> ids(corpus::kMaxTokens, corpus::kPad);
  ids[3] = m.config().vocab_size;
  try {
    m.encode_text(ids);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidToken);
  }
}

TEST(EncodeText, ReferenceGolden) {
  const Tensor v = reference_model().encode_text(fixture_sample().tokens);
  expect_golden(v.data(), {-0.019402850505426714, -0.0083563680964894443, -0.022236906912279562, -0.00067897655282051384},
                "v_q");
}

TEST(EncodeImage, ZeroFrameGivesEqualRowsAtInitialization) {
  H2RatModel m(default_config(), 3);
  const Tensor v = m.encode_image(Tensor({13, 8, 8}));
  ASSERT_EQ(v.shape(), (nn::Shape{16, 64}));
  for (std::size_t j = 1; j < 16; ++j) {
    for (std::size_t c = 0; c < 64; ++c) EXPECT_EQ(v.at(j, c), v.at(0, c));
  }
}

TEST(EncodeImage, WrongShapeIsShapeMismatch) {
  H2RatModel m(default_config(), 0);
  try {
    m.encode_image(Tensor({12, 8, 8}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
}

TEST(EncodeImage, ObjectsAwayFromBlockEdgesChangeOnlyTheirRows) {
  // The conv stack sees 3x3 then (after pooling) 3x3 pooled cells, so a
  // single lit cell influences its pooled block and the pooled neighbours.
  // Swapping two objects between far-apart blocks therefore changes exactly
  // the rows of those blocks and their immediate neighbours.
  const H2RatModel& m = reference_model();
  Tensor a({13, 8, 8}), b({13, 8, 8});
  a.at(0, 0, 0) = 1.0;  // cup in region 0
  a.at(6, 7, 7) = 1.0;  // bin in region 15
  b.at(6, 0, 0) = 1.0;
  b.at(0, 7, 7) = 1.0;
  const Tensor va = m.encode_image(a), vb = m.encode_image(b);
  const std::set<std::size_t> touched = {0, 1, 4, 5, 10, 11, 14, 15};
  for (std::size_t j = 0; j < 16; ++j) {
    bool same = true;
    for (std::size_t c = 0; c < 64; ++c) same &= va.at(j, c) == vb.at(j, c);
    EXPECT_EQ(same, !touched.count(j)) << "row " << j;
  }
  EXPECT_NE(va.at(0, 0), vb.at(0, 0));
  EXPECT_NE(va.at(15, 0), vb.at(15, 0));
}

TEST(EncodeImage, ReferenceGolden) {
  const Tensor v = reference_model().encode_image(fixture_sample().frame);
  expect_golden(v.data(), {0.0085668749592987519, -0.03060926670920442, -0.036607962062581711, -0.018797718668952777},
                "v_i");
}

TEST(AttentionLayer, IdenticalRowsGiveUniformAttention) {
  const H2RatModel& m = reference_model();
  Rng rng(4);
  Tensor row({64});
  for (double& x : row.data()) x = rng.uniform(-1, 1);
  Tensor v({16, 64});
  for (std::size_t j = 0; j < 16; ++j) {
    for (std::size_t c = 0; c < 64; ++c) v.at(j, c) = row[c];
  }
  Tensor u({64}), u_out;
  for (double& x : u.data()) x = rng.uniform(-1, 1);
  const AttentionMap p = m.attention_layer(v, u, 1, &u_out);
  for (double x : p.p.data()) EXPECT_NEAR(x, 1.0 / 16.0, 1e-15);
  EXPECT_EQ(p.layer_index, 1);
}

TEST(AttentionLayer, RowPermutationPermutesAttentionAndKeepsContext) {
  const H2RatModel& m = reference_model();
  const Tensor v = m.encode_image(fixture_sample().frame);
  const Tensor u = m.encode_text(fixture_sample().tokens);
  std::vector<std::size_t> perm(16);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(8);
  rng.shuffle(std::span<std::size_t>(perm));
  for (int layer : {1, 2}) {
    Tensor u1, u2;
    const AttentionMap a = m.attention_layer(v, u, layer, &u1);
    const AttentionMap b = m.attention_layer(permute_rows(v, perm), u, layer, &u2);
    for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(b.p[i], a.p[perm[i]]);
    EXPECT_EQ(u1, u2);
  }
}

TEST(AttentionLayer, ReferenceGolden) {
  const H2RatModel& m = reference_model();
  const Tensor v = m.encode_image(fixture_sample().frame);
  const Tensor u = m.encode_text(fixture_sample().tokens);
  Tensor u_out;
  const AttentionMap p = m.attention_layer(v, u, 1, &u_out);
  expect_golden(p.p.data(), {0.066241903839074315, 0.065071588911925618, 0.065728842775673563, 0.065066183837066985},
                "p1");
  expect_golden(u_out.data(), {-0.056909709344648486, -0.021970498908627463, -0.063977398411712447, -0.022212213954641374},
                "u1");
}

TEST(Forward, DistributionsAndDeterminism) {
  const H2RatModel& m = reference_model();
  for (const Sample& s : make_data(12, 7)) {
    const ForwardOutputs a = m.forward(s.tokens, s.frame);
    const ForwardOutputs b = m.forward(s.tokens, s.frame);
    EXPECT_NEAR(sum(a.p1.p.data()), 1.0, 1e-12);
    EXPECT_NEAR(sum(a.p2.p.data()), 1.0, 1e-12);
    for (double x : a.p2.p.data()) EXPECT_GE(x, 0.0);
    EXPECT_EQ(a.p2.layer_index, 2);
    EXPECT_EQ(a.region_logits, b.region_logits);
    EXPECT_EQ(a.action_logits, b.action_logits);
    EXPECT_EQ(a.context.size(), 64u);
  }
}

TEST(Forward, RegionPermutationLeavesHeadsUnchanged) {
  const H2RatModel& m = reference_model();
  const ForwardOutputs base = m.forward(fixture_sample().tokens, fixture_sample().frame);
  std::vector<std::size_t> perm(16);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  const ForwardOutputs shuffled = m.attend(permute_rows(base.v_i, perm), base.v_q);
  for (std::size_t i = 0; i < 16; ++i) {
    EXPECT_EQ(shuffled.p1.p[i], base.p1.p[perm[i]]);
    EXPECT_EQ(shuffled.p2.p[i], base.p2.p[perm[i]]);
  }
  EXPECT_EQ(shuffled.region_logits, base.region_logits);
  EXPECT_EQ(shuffled.type_logits, base.type_logits);
  EXPECT_EQ(shuffled.action_logits, base.action_logits);
}

TEST(Forward, ReferenceGolden) {
  const ForwardOutputs out =
      reference_model().forward(fixture_sample().tokens, fixture_sample().frame);
  expect_golden(out.region_logits.data(), {0.010170290814051767, -0.07307288958491133, 0.069333652981728777, -0.12264942627355253},
                "region_logits");
  expect_golden(out.type_logits.data(), {-0.19565860491327405, 0.022585614805826135, 0.014312909026634839, -0.090731749965877323},
                "type_logits");
  expect_golden(out.action_logits.data(), {0.15462518166760417, 0.19916629438965155, 0.17921943040351787, 0.016593545494008852, -0.29253868675862582},
                "action_logits");
}

TEST(Loss, UniformLogits) {
  const ForwardOutputs out = logits_only(Tensor({16}), Tensor({4}), Tensor({5}));
  const double expected = std::log(16.0) + std::log(4.0) + std::log(5.0);
  EXPECT_NEAR(loss(out, {3, 1, 1}, {.attention = 0.0}), expected, 1e-12);
  EXPECT_NEAR(expected, 5.7683, 1e-4);
}

TEST(Loss, AttentionTermAddsScoreCrossEntropy) {
  ForwardOutputs out = logits_only(Tensor({16}), Tensor({4}), Tensor({5}));
  out.att2.scores = Tensor({16});
  EXPECT_NEAR(loss(out, {3, 1, 1}, {.attention = 0.5}),
              std::log(16.0) * 1.5 + std::log(4.0) + std::log(5.0), 1e-12);
}

TEST(Loss, LargeMarginOneHotIsNearZero) {
  Tensor r({16}), t({4}), a({5});
  r[7] = 50.0;
  t[2] = 50.0;
  a[2] = 50.0;
  EXPECT_LT(loss(logits_only(r, t, a), {7, 2, 2}, {.attention = 0.0}), 1e-3);
}

TEST(Loss, OutOfRangeLabelIsInvalidLabel) {
  const ForwardOutputs out = logits_only(Tensor({16}), Tensor({4}), Tensor({5}));
  for (const Labels& l : {Labels{16, 0, 0}, Labels{0, 4, 0}, Labels{0, 0, 5}, Labels{-1, 0, 0}}) {
    try {
      loss(out, l, {.attention = 0.0});
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kInvalidLabel);
    }
  }
}

// Directional derivatives along a random direction within each parameter
// tensor: the analytic g.d against a central difference of the loss.
TEST(Loss, DirectionalDerivativesMatchFiniteDifferences) {
  H2RatModel m(default_config(), 1);
  const std::vector<Sample> batch = make_data(2, 3);
  const LossWeights weights;
  auto batch_loss = [&](bool backprop) {
    double total = 0.0;
    for (const Sample& s : batch) {
      const Labels labels{s.truth_region, s.truth_error_type, s.truth_action};
      const ForwardOutputs out = m.forward(s.tokens, s.frame);
      if (backprop) m.backward(out, labels, weights, 0.5);
      total += 0.5 * loss(out, labels, weights);
    }
    return total;
  };
  m.zero_grad();
  batch_loss(true);
  Rng rng(5);
  for (nn::Parameter* p : m.parameters()) {
    Tensor direction(p->value.shape());
    for (double& x : direction.data()) x = rng.uniform(-1.0, 1.0);
    double analytic = 0.0;
    for (std::size_t i = 0; i < direction.size(); ++i) analytic += p->grad[i] * direction[i];
    const Tensor saved = p->value;
    const double h = 1e-5;
    for (std::size_t i = 0; i < direction.size(); ++i) p->value[i] = saved[i] + h * direction[i];
    const double up = batch_loss(false);
    for (std::size_t i = 0; i < direction.size(); ++i) p->value[i] = saved[i] - h * direction[i];
    const double down = batch_loss(false);
    p->value = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double rel = std::fabs(analytic - numeric) / std::max(1e-8, std::fabs(analytic) + std::fabs(numeric));
    EXPECT_LT(rel, 1e-4) << p->name << " analytic " << analytic << " numeric " << numeric;
  }
}

TEST(Recommend, DominantLogit) {
  const CorrectionRecommendation r =
      recommend_action(logits_only(Tensor({16}), Tensor({4}), Tensor::vector({10, 0, 0, 0, 0})));
  EXPECT_EQ(r.chosen, 0);
  const double oracle = std::exp(10.0) / (std::exp(10.0) + 4.0);
  EXPECT_NEAR(r.probs[0], oracle, 1e-12);
  EXPECT_NEAR(r.probs[0], 0.99982, 1e-5);
}

TEST(Recommend, MixedLogits) {
  const std::vector<double> logits = {2.0, 1.0, 0.5, 0.5, 0.1};
  const CorrectionRecommendation r =
      recommend_action(
          logits_only(Tensor({16}), Tensor({4}), Tensor::vector({2.0, 1.0, 0.5, 0.5, 0.1})));
  double z = 0.0;
  for (double l : logits) z += std::exp(l);
  EXPECT_EQ(r.chosen, 0);
  EXPECT_NEAR(r.probs[0], std::exp(2.0) / z, 1e-12);
  EXPECT_NEAR(r.probs[0], 0.509, 1e-3);
}

TEST(Recommend, TiesGoToLowestIndex) {
  ForwardOutputs out = logits_only(Tensor({16}), Tensor({4}), Tensor({5}));
  out.p2.p = Tensor({16});
  out.p2.p[4] = 0.5;
  out.p2.p[9] = 0.5;
  const CorrectionRecommendation r = recommend_action(out);
  EXPECT_EQ(r.chosen, 0);
  EXPECT_EQ(r.target_region, 4);
  for (double p : r.probs) EXPECT_NEAR(p, 0.2, 1e-15);
}

TEST(Recommend, ShiftInvariant) {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    Tensor a({5});
    for (double& x : a.data()) x = rng.uniform(-5, 5);
    Tensor b = a;
    const double shift = rng.uniform(-100, 100);
    for (double& x : b.data()) x += shift;
    const auto ra = recommend_action(logits_only(Tensor({16}), Tensor({4}), a));
    const auto rb = recommend_action(logits_only(Tensor({16}), Tensor({4}), b));
    EXPECT_EQ(ra.chosen, rb.chosen);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(ra.probs[i], rb.probs[i], 1e-12);
  }
}

TEST(Argmax, LowestIndexTieBreak) {
  const std::vector<double> v = {1.0, 3.0, 3.0, 2.0};
  EXPECT_EQ(argmax(v), 1);
}

TEST(Train, ZeroEpochsKeepsInitialization) {
  H2RatModel a(default_config(), 5), b(default_config(), 5);
  const std::vector<Sample> data = make_data(4, 0);
  train(a, data, {.epochs = 0});
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->value, pb[i]->value);
}

TEST(Train, EmptyDatasetThrows) {
  H2RatModel m(default_config(), 0);
  try {
    train(m, std::span<const Sample>{}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyDataset);
  }
}

TEST(Train, OverfitsSmallDataset) {
  H2RatModel m(default_config(), 0);
  const std::vector<Sample> data = make_data(32, 4);
  std::vector<double> losses;
  train(m, data, {.epochs = 5, .lr = 1e-3, .batch = 32, .seed = 1},
        [&](const EpochReport& r) { losses.push_back(r.loss); });
  ASSERT_EQ(losses.size(), 5u);
  int rises = 0;
  for (std::size_t i = 1; i < losses.size(); ++i) rises += losses[i] >= losses[i - 1];
  EXPECT_LE(rises, 1);
  EXPECT_LT(losses.back(), losses.front());
}

TEST(Train, SameSeedGivesIdenticalCheckpoints) {
  const std::vector<Sample> data = make_data(40, 6);
  H2RatModel a(default_config(), 2), b(default_config(), 2);
  train(a, data, {.epochs = 2, .batch = 16, .seed = 9});
  train(b, data, {.epochs = 2, .batch = 16, .seed = 9});
  EXPECT_EQ(save_checkpoint(a, "v", 2, 2), save_checkpoint(b, "v", 2, 2));
}

TEST(Evaluate, OracleAvoidsEveryFailure) {
  const std::vector<Sample> data = make_data(40, 13);
  const Metrics m = evaluate(reference_model(), data, true);
  EXPECT_EQ(m.n, 40u);
  EXPECT_EQ(m.failure_avoidance_sim, 1.0);
}

TEST(Evaluate, MetricsAreProbabilitiesAndProductIsConsistent) {
  const Metrics m = evaluate(reference_model(), make_data(40, 14));
  for (double v : {m.attention_transfer_acc, m.top_action_prob, m.failure_avoidance_sim,
                   m.failure_avoidance_product, m.error_type_acc, m.action_acc}) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_NEAR(m.failure_avoidance_product, m.attention_transfer_acc * m.top_action_prob, 1e-15);
}

TEST(Evaluate, ContinueAlwaysFails) {
  // Force CONTINUE by making its bias dominate.
  H2RatModel m(default_config(), 0);
  for (nn::Parameter* p : m.parameters()) {
    if (p->name == "head_action.b") p->value[4] = 1e6;
  }
  const Metrics metrics = evaluate(m, make_data(40, 15));
  EXPECT_EQ(metrics.failure_avoidance_sim, 0.0);
  EXPECT_EQ(metrics.action_acc, 0.0);
}

TEST(Evaluate, EmptyDatasetThrows) {
  EXPECT_THROW(evaluate(reference_model(), std::span<const Sample>{}), Error);
}

TEST(Checkpoint, RoundTripPreservesOutputs) {
  const std::string vocab = corpus::builtin_vocab().hash();
  const std::string text = save_checkpoint(reference_model(), vocab, 0, 1);
  const H2RatModel loaded = load_checkpoint(text, vocab);
  EXPECT_EQ(save_checkpoint(loaded, vocab, 0, 1), text);
  const ForwardOutputs a = reference_model().forward(fixture_sample().tokens, fixture_sample().frame);
  const ForwardOutputs b = loaded.forward(fixture_sample().tokens, fixture_sample().frame);
  EXPECT_EQ(a.action_logits, b.action_logits);
  EXPECT_EQ(checkpoint_hash(text).size(), 16u);
}

TEST(Checkpoint, VocabularyMismatch) {
  const std::string text = save_checkpoint(reference_model(), "aaaa", 0, 1);
  try {
    load_checkpoint(text, "bbbb");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCheckpointMismatch);
  }
}

TEST(Metrics, JsonCarriesAllFields) {
  Metrics m;
  m.n = 3;
  const auto j = metrics_to_json(m, "0123456789abcdef");
  for (const char* k : {"attention_transfer_acc", "top_action_prob", "failure_avoidance_sim",
                        "failure_avoidance_product", "n", "checkpoint_hash"}) {
    EXPECT_TRUE(j.contains(k)) << k;
  }
}

}  // namespace
}  // namespace h2r::model
