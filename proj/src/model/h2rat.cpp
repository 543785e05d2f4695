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

#include "model/h2rat.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "nn/optim.hpp"

namespace h2r::model {

using nn::InitScheme;
using nn::Parameter;
using nn::Tensor;

nlohmann::ordered_json ModelConfig::to_json() const {
  return {{"vocab_size", vocab_size},       {"d_embed", d_embed},
          {"d_hidden", d_hidden},           {"d_attn", d_attn},
          {"regions", regions},             {"n_error_types", n_error_types},
          {"n_actions", n_actions},         {"attention_layers", attention_layers},
          {"conv1_channels", conv1_channels}, {"frame_channels", frame_channels}};
}

ModelConfig ModelConfig::from_json(const nlohmann::ordered_json& j) {
  ModelConfig c;
  try {
    c.vocab_size = j.at("vocab_size").get<int>();
    c.d_embed = j.at("d_embed").get<int>();
    c.d_hidden = j.at("d_hidden").get<int>();
    c.d_attn = j.at("d_attn").get<int>();
    c.regions = j.at("regions").get<int>();
    c.n_error_types = j.at("n_error_types").get<int>();
    c.n_actions = j.at("n_actions").get<int>();
    c.attention_layers = j.at("attention_layers").get<int>();
    c.conv1_channels = j.at("conv1_channels").get<int>();
    c.frame_channels = j.at("frame_channels").get<int>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kCheckpointMismatch, std::string("model config: ") + e.what());
  }
  if (c.regions != 16 || c.attention_layers != 2 || c.n_error_types != 4 ||
      c.n_actions != 5 || c.frame_channels != 13 || c.vocab_size <= 0 ||
      c.d_embed <= 0 || c.d_hidden <= 0 || c.d_attn <= 0 || c.conv1_channels <= 0) {
    fail(ErrorCode::kCheckpointMismatch, "unsupported model config " + j.dump());
  }
  return c;
}

namespace {

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

AttentionParams make_attention(const std::string& prefix, const ModelConfig& c, Rng& rng) {
  return {nn::init_parameter(prefix + ".w_image", {sz(c.d_hidden), sz(c.d_attn)},
                             InitScheme::kXavier, rng),
          nn::init_parameter(prefix + ".w_query", {sz(c.d_hidden), sz(c.d_attn)},
                             InitScheme::kXavier, rng),
          nn::init_parameter(prefix + ".bias", {sz(c.d_attn)}, InitScheme::kZeros, rng),
          nn::init_parameter(prefix + ".score", {sz(c.d_attn)}, InitScheme::kXavier, rng)};
}

// [C x 4 x 4] <-> [16 x C]
Tensor channels_to_rows(const Tensor& t) {
  const std::size_t channels = t.dim(0), cells = t.dim(1) * t.dim(2);
  Tensor out({cells, channels});
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t j = 0; j < cells; ++j) out.at(j, c) = t[c * cells + j];
  }
  return out;
}

void add_head_grad(const Tensor& logits, int label, double weight, double scale,
                   const Tensor& context, Parameter& w, Parameter& b, Tensor& dcontext) {
  if (weight == 0.0) return;
  Tensor d = nn::cross_entropy_backward(logits, static_cast<std::size_t>(label));
  for (double& v : d.data()) v *= weight * scale;
  nn::add_bias_backward(d, nullptr, &b.grad);
  nn::matmul_backward(context, w.value, d, &dcontext, &w.grad);
}

}  // namespace

H2RatModel::H2RatModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  const ModelConfig& c = config_;
  if (c.vocab_size <= 0) fail(ErrorCode::kUsage, "model needs a nonempty vocabulary");
  Rng rng(seed);
  const std::size_t h4 = 4 * sz(c.d_hidden);
  embed_ = nn::init_parameter("embed", {sz(c.vocab_size), sz(c.d_embed)},
                              InitScheme::kXavier, rng);
  lstm_wx_ = nn::init_parameter("lstm.wx", {sz(c.d_embed), h4}, InitScheme::kXavier, rng);
  lstm_wh_ = nn::init_parameter("lstm.wh", {sz(c.d_hidden), h4}, InitScheme::kXavier, rng);
  lstm_b_ = nn::init_parameter("lstm.b", {h4}, InitScheme::kZeros, rng);
  conv1_w_ = nn::init_parameter("conv1.w", {sz(c.conv1_channels), sz(c.frame_channels), 3, 3},
                                InitScheme::kXavier, rng);
  conv1_b_ = nn::init_parameter("conv1.b", {sz(c.conv1_channels)}, InitScheme::kZeros, rng);
  conv2_w_ = nn::init_parameter("conv2.w", {sz(c.d_hidden), sz(c.conv1_channels), 3, 3},
                                InitScheme::kXavier, rng);
  conv2_b_ = nn::init_parameter("conv2.b", {sz(c.d_hidden)}, InitScheme::kZeros, rng);
  region_bias_ = nn::init_parameter("conv2.region_bias", {sz(c.regions), sz(c.d_hidden)},
                                    InitScheme::kZeros, rng);
  att1_ = make_attention("att1", c, rng);
  att2_ = make_attention("att2", c, rng);
  region_w_ = nn::init_parameter("head_region.w", {sz(c.d_hidden), sz(c.regions)},
                                 InitScheme::kXavier, rng);
  region_b_ = nn::init_parameter("head_region.b", {sz(c.regions)}, InitScheme::kZeros, rng);
  type_w_ = nn::init_parameter("head_type.w", {sz(c.d_hidden), sz(c.n_error_types)},
                               InitScheme::kXavier, rng);
  type_b_ = nn::init_parameter("head_type.b", {sz(c.n_error_types)}, InitScheme::kZeros, rng);
  action_w_ = nn::init_parameter("head_action.w", {sz(c.d_hidden), sz(c.n_actions)},
                                 InitScheme::kXavier, rng);
  action_b_ = nn::init_parameter("head_action.b", {sz(c.n_actions)}, InitScheme::kZeros, rng);
}

std::vector<Parameter*> H2RatModel::parameters() {
  return {&embed_,         &lstm_wx_,        &lstm_wh_,      &lstm_b_,
          &conv1_w_,       &conv1_b_,        &conv2_w_,      &conv2_b_,
          &region_bias_,   &att1_.w_image,   &att1_.w_query, &att1_.bias,
          &att1_.score,    &att2_.w_image,   &att2_.w_query, &att2_.bias,
          &att2_.score,    &region_w_,       &region_b_,     &type_w_,
          &type_b_,        &action_w_,       &action_b_};
}

std::vector<const Parameter*> H2RatModel::parameters() const {
  auto mutable_params = const_cast<H2RatModel*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

void H2RatModel::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

const AttentionParams& H2RatModel::attention(int layer) const {
  if (layer == 1) return att1_;
  if (layer == 2) return att2_;
  fail(ErrorCode::kUsage, "attention layer " + std::to_string(layer));
}

Tensor H2RatModel::encode_text(std::span<const int> tokens, TextCache* cache) const {
  const Tensor embedded = nn::embedding(embed_.value, tokens);
  const std::size_t hidden = sz(config_.d_hidden);
  nn::LstmState state{Tensor({hidden}), Tensor({hidden})};
  if (cache) {
    cache->ids.assign(tokens.begin(), tokens.end());
    cache->steps.assign(tokens.size(), {});
  }
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const auto row = embedded.row(t);
    const Tensor x({row.size()}, std::vector<double>(row.begin(), row.end()));
    state = nn::lstm_cell(x, state.h, state.c, lstm_wx_.value, lstm_wh_.value,
                          lstm_b_.value, cache ? &cache->steps[t] : nullptr);
  }
  return state.h;
}

Tensor H2RatModel::encode_image(const Tensor& frame, ImageCache* cache) const {
  if (frame.shape() != nn::Shape{sz(config_.frame_channels), 8, 8}) {
    fail(ErrorCode::kShapeMismatch,
         "encode_image: expected [13x8x8] frame, got " + nn::shape_to_string(frame.shape()));
  }
  Tensor act1 = nn::tanh_forward(nn::conv2d_3x3(frame, conv1_w_.value, conv1_b_.value));
  nn::MaxPoolResult pool = nn::maxpool2x2(act1);
  Tensor pre2 = nn::conv2d_3x3(pool.out, conv2_w_.value, conv2_b_.value);
  const std::size_t channels = pre2.dim(0), cells = pre2.dim(1) * pre2.dim(2);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t j = 0; j < cells; ++j) pre2[c * cells + j] += region_bias_.value.at(j, c);
  }
  Tensor act2 = nn::tanh_forward(pre2);
  Tensor rows = channels_to_rows(act2);
  if (cache) *cache = ImageCache{frame, std::move(act1), std::move(pool), std::move(act2)};
  return rows;
}

AttentionMap H2RatModel::attention_layer(const Tensor& v_i, const Tensor& u, int layer,
                                         Tensor* u_out, AttentionCache* cache) const {
  const AttentionParams& a = attention(layer);
  if (v_i.rank() != 2 || v_i.dim(1) != u.size() || u.rank() != 1) {
    fail(ErrorCode::kShapeMismatch, "attention_layer: v_I " +
                                        nn::shape_to_string(v_i.shape()) + ", u " +
                                        nn::shape_to_string(u.shape()));
  }
  const std::size_t regions = v_i.dim(0), width = v_i.dim(1);
  Tensor query = nn::add_bias(nn::matmul(u, a.w_query.value), a.bias.value);
  Tensor hidden = nn::tanh_forward(nn::add_bias(nn::matmul(v_i, a.w_image.value), query));
  Tensor scores({regions});
  for (std::size_t j = 0; j < regions; ++j) {
    const auto h = hidden.row(j);
    double s = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) s += h[k] * a.score.value[k];
    scores[j] = s;
  }
  Tensor p = nn::softmax(scores, 0);

  // Pooled visual summary; canonical_sum keeps it invariant to region order.
  Tensor next({width});
  std::vector<double> terms(regions);
  for (std::size_t c = 0; c < width; ++c) {
    for (std::size_t j = 0; j < regions; ++j) terms[j] = p[j] * v_i.at(j, c);
    next[c] = nn::canonical_sum(terms) + u[c];
  }
  if (cache) *cache = AttentionCache{std::move(hidden), std::move(scores), p, u, next};
  if (u_out) *u_out = std::move(next);
  return AttentionMap{std::move(p), layer};
}

ForwardOutputs H2RatModel::attend(const Tensor& v_i, const Tensor& v_q) const {
  ForwardOutputs out;
  out.v_i = v_i;
  out.v_q = v_q;
  Tensor u1, u2;
  out.p1 = attention_layer(v_i, v_q, 1, &u1, &out.att1);
  out.p2 = attention_layer(v_i, u1, 2, &u2, &out.att2);
  out.region_logits = nn::add_bias(nn::matmul(u2, region_w_.value), region_b_.value);
  out.type_logits = nn::add_bias(nn::matmul(u2, type_w_.value), type_b_.value);
  out.action_logits = nn::add_bias(nn::matmul(u2, action_w_.value), action_b_.value);
  out.context = std::move(u2);
  return out;
}

ForwardOutputs H2RatModel::forward(std::span<const int> tokens, const Tensor& frame) const {
  TextCache text;
  ImageCache image;
  Tensor v_q = encode_text(tokens, &text);
  Tensor v_i = encode_image(frame, &image);
  ForwardOutputs out = attend(v_i, v_q);
  out.text = std::move(text);
  out.image = std::move(image);
  return out;
}

void H2RatModel::backward_attention(int layer, const Tensor& v_i, const AttentionCache& cache,
                                    const Tensor& du_out, const Tensor* extra_dscores,
                                    Tensor& dv_i, Tensor& du_in) {
  AttentionParams& a = layer == 1 ? att1_ : att2_;
  const std::size_t regions = v_i.dim(0), width = v_i.dim(1);
  accumulate(du_in, du_out);

  Tensor dp({regions});
  for (std::size_t j = 0; j < regions; ++j) {
    double acc = 0.0;
    for (std::size_t c = 0; c < width; ++c) {
      acc += du_out[c] * v_i.at(j, c);
      dv_i.at(j, c) += cache.p[j] * du_out[c];
    }
    dp[j] = acc;
  }
  Tensor dscores = nn::softmax_backward(cache.p, dp, 0);
  if (extra_dscores) accumulate(dscores, *extra_dscores);

  const std::size_t k = cache.hidden.dim(1);
  Tensor dhidden({regions, k});
  for (std::size_t j = 0; j < regions; ++j) {
    for (std::size_t c = 0; c < k; ++c) {
      dhidden.at(j, c) = dscores[j] * a.score.value[c];
      a.score.grad[c] += dscores[j] * cache.hidden.at(j, c);
    }
  }
  const Tensor dpre = nn::tanh_backward(cache.hidden, dhidden);
  nn::matmul_backward(v_i, a.w_image.value, dpre, &dv_i, &a.w_image.grad);
  Tensor dquery({k});
  nn::add_bias_backward(dpre, nullptr, &dquery);
  accumulate(a.bias.grad, dquery);
  nn::matmul_backward(cache.u_in, a.w_query.value, dquery, &du_in, &a.w_query.grad);
}

void H2RatModel::backward(const ForwardOutputs& out, const Labels& labels,
                          const LossWeights& weights, double scale) {
  if (out.text.steps.empty() || out.image.act2.empty()) {
    fail(ErrorCode::kUsage, "backward needs outputs of forward()");
  }
  const std::size_t width = out.context.size();
  Tensor du2({width});
  add_head_grad(out.region_logits, labels.region, weights.region, scale, out.context,
                region_w_, region_b_, du2);
  add_head_grad(out.type_logits, labels.error_type, weights.error_type, scale, out.context,
                type_w_, type_b_, du2);
  add_head_grad(out.action_logits, labels.action, weights.action, scale, out.context,
                action_w_, action_b_, du2);

  Tensor dscores2;
  if (weights.attention != 0.0) {
    dscores2 = nn::cross_entropy_backward(out.att2.scores, static_cast<std::size_t>(labels.region));
    for (double& v : dscores2.data()) v *= weights.attention * scale;
  }

  Tensor dv_i(out.v_i.shape());
  Tensor du1({width});
  backward_attention(2, out.v_i, out.att2, du2, dscores2.empty() ? nullptr : &dscores2,
                     dv_i, du1);
  Tensor dv_q({width});
  backward_attention(1, out.v_i, out.att1, du1, nullptr, dv_i, dv_q);

  // Image encoder.
  const ImageCache& img = out.image;
  const std::size_t channels = img.act2.dim(0), cells = img.act2.dim(1) * img.act2.dim(2);
  Tensor dact2(img.act2.shape());
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t j = 0; j < cells; ++j) dact2[c * cells + j] = dv_i.at(j, c);
  }
  const Tensor dpre2 = nn::tanh_backward(img.act2, dact2);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t j = 0; j < cells; ++j) region_bias_.grad.at(j, c) += dpre2[c * cells + j];
  }
  Tensor dpool(img.pool.out.shape());
  nn::conv2d_3x3_backward(img.pool.out, conv2_w_.value, dpre2, &dpool, &conv2_w_.grad,
                          &conv2_b_.grad);
  const Tensor dact1 = nn::maxpool2x2_backward(img.act1.shape(), img.pool.argmax, dpool);
  const Tensor dpre1 = nn::tanh_backward(img.act1, dact1);
  nn::conv2d_3x3_backward(img.frame, conv1_w_.value, dpre1, nullptr, &conv1_w_.grad,
                          &conv1_b_.grad);

  // Text encoder, back through time.
  const std::size_t hidden = sz(config_.d_hidden);
  Tensor dh = dv_q;
  Tensor dc({hidden});
  Tensor dembedded({out.text.ids.size(), sz(config_.d_embed)});
  for (std::size_t t = out.text.steps.size(); t-- > 0;) {
    nn::LstmInputGrads g = nn::lstm_cell_backward(out.text.steps[t], lstm_wx_.value,
                                                  lstm_wh_.value, dh, dc, &lstm_wx_.grad,
                                                  &lstm_wh_.grad, &lstm_b_.grad);
    std::copy(g.dx.data().begin(), g.dx.data().end(), dembedded.row(t).begin());
    dh = std::move(g.dh_prev);
    dc = std::move(g.dc_prev);
  }
  nn::embedding_backward(out.text.ids, dembedded, embed_.grad);
}

double loss(const ForwardOutputs& out, const Labels& labels, const LossWeights& weights) {
  double total = 0.0;
  auto term = [&](const Tensor& logits, int label, double weight) {
    if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
      fail(ErrorCode::kInvalidLabel, "label " + std::to_string(label) + " outside [0, " +
                                         std::to_string(logits.size()) + ")");
    }
    if (weight != 0.0) total += weight * nn::cross_entropy(logits, static_cast<std::size_t>(label));
  };
  term(out.region_logits, labels.region, weights.region);
  term(out.type_logits, labels.error_type, weights.error_type);
  term(out.action_logits, labels.action, weights.action);
  if (weights.attention != 0.0) term(out.att2.scores, labels.region, weights.attention);
  return total;
}

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

CorrectionRecommendation recommend_action(const ForwardOutputs& out) {
  if (out.action_logits.size() != 5) {
    fail(ErrorCode::kShapeMismatch, "recommend_action: expected 5 action logits, got " +
                                        nn::shape_to_string(out.action_logits.shape()));
  }
  CorrectionRecommendation rec;
  const Tensor probs = nn::softmax(out.action_logits, 0);
  std::copy(probs.data().begin(), probs.data().end(), rec.probs.begin());
  rec.chosen = argmax(rec.probs);
  rec.target_region = argmax(out.p2.p.data());
  return rec;
}

}  // namespace h2r::model
