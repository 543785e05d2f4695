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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "nn/layers.hpp"

namespace h2r::model {

struct ModelConfig {
  int vocab_size = 0;
  int d_embed = 32;
  int d_hidden = 64;  // LSTM width and region feature width
  int d_attn = 64;    // attention hidden width
  int regions = 16;
  int n_error_types = 4;
  int n_actions = 5;
  int attention_layers = 2;
  int conv1_channels = 32;
  int frame_channels = 13;

  nlohmann::ordered_json to_json() const;
  /// Throws CheckpointMismatch for configurations this build cannot run.
  static ModelConfig from_json(const nlohmann::ordered_json& j);
  bool operator==(const ModelConfig&) const = default;
};

struct AttentionParams {
  nn::Parameter w_image;  // [d_hidden x d_attn]
  nn::Parameter w_query;  // [d_hidden x d_attn]
  nn::Parameter bias;     // [d_attn]
  nn::Parameter score;    // [d_attn]
};

struct AttentionMap {
  nn::Tensor p;  // [regions], a probability vector
  int layer_index = 1;
};

/// Attention-layer intermediates kept for the backward pass.
struct AttentionCache {
  nn::Tensor hidden;  // tanh(v W_I + u W_Q + b), [regions x d_attn]
  nn::Tensor scores;  // [regions]
  nn::Tensor p;       // softmax(scores)
  nn::Tensor u_in;
  nn::Tensor u_out;
};

struct TextCache {
  std::vector<int> ids;
  std::vector<nn::LstmCache> steps;
};

struct ImageCache {
  nn::Tensor frame;      // [13 x 8 x 8]
  nn::Tensor act1;       // tanh(conv1), [32 x 8 x 8]
  nn::MaxPoolResult pool;
  nn::Tensor act2;       // tanh(conv2 + region bias), [64 x 4 x 4]
};

/// Output of the stacked attention pass. Caches are populated only by
/// H2RatModel::forward and are what backward() consumes.
struct ForwardOutputs {
  AttentionMap p1;
  AttentionMap p2;
  nn::Tensor region_logits;  // [16]
  nn::Tensor type_logits;    // [4]
  nn::Tensor action_logits;  // [5]
  nn::Tensor context;        // u2, the attended context the heads read

  nn::Tensor v_q;  // [d_hidden]
  nn::Tensor v_i;  // [regions x d_hidden]
  AttentionCache att1, att2;
  TextCache text;
  ImageCache image;
};

struct Labels {
  int region = 0;
  int error_type = 0;
  int action = 0;
};

/// Unit weights on the three heads; `attention` weights the cross-entropy of
/// the layer-2 attention map against the truth region.
struct LossWeights {
  double region = 1.0;
  double error_type = 1.0;
  double action = 1.0;
  double attention = 1.0;
};

struct CorrectionRecommendation {
  std::array<double, 5> probs{};
  int chosen = 0;
  int target_region = 0;
};

class H2RatModel {
 public:
  /// Xavier for weight matrices and the embedding, zeros for biases and the
  /// region bias table; draws in parameter order from Rng(seed).
  H2RatModel(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }

  /// Every parameter in a fixed order (also the checkpoint order).
  std::vector<nn::Parameter*> parameters();
  std::vector<const nn::Parameter*> parameters() const;
  void zero_grad();

  /// Embedding lookup and a 16-step LSTM; returns the final hidden state.
  nn::Tensor encode_text(std::span<const int> tokens, TextCache* cache = nullptr) const;

  /// conv 13->32 + tanh, 2x2 max pool, conv 32->64 + per-region bias + tanh;
  /// row j of the result is region j in region_of order.
  nn::Tensor encode_image(const nn::Tensor& frame, ImageCache* cache = nullptr) const;

  /// One attention hop over the region rows:
  ///   h_j = tanh(W_I v_j + W_Q u + b),  p = softmax(w . h_j),
  ///   u' = sum_j p_j v_j + u.
  AttentionMap attention_layer(const nn::Tensor& v_i, const nn::Tensor& u, int layer,
                               nn::Tensor* u_out, AttentionCache* cache = nullptr) const;

  /// Both hops and the three heads from precomputed encodings.
  ForwardOutputs attend(const nn::Tensor& v_i, const nn::Tensor& v_q) const;

  /// Full pass from tokens and frame, with caches for backward().
  ForwardOutputs forward(std::span<const int> tokens, const nn::Tensor& frame) const;

  /// Accumulates d(scale * loss)/d(params) into each Parameter::grad.
  void backward(const ForwardOutputs& out, const Labels& labels,
                const LossWeights& weights, double scale = 1.0);

  /// Layer-indexed attention parameters (1 or 2).
  const AttentionParams& attention(int layer) const;

 private:
  void backward_attention(int layer, const nn::Tensor& v_i, const AttentionCache& cache,
                          const nn::Tensor& du_out, const nn::Tensor* extra_dscores,
                          nn::Tensor& dv_i, nn::Tensor& du_in);

  ModelConfig config_;
  nn::Parameter embed_;
  nn::Parameter lstm_wx_, lstm_wh_, lstm_b_;
  nn::Parameter conv1_w_, conv1_b_, conv2_w_, conv2_b_;
  nn::Parameter region_bias_;
  AttentionParams att1_, att2_;
  nn::Parameter region_w_, region_b_;
  nn::Parameter type_w_, type_b_;
  nn::Parameter action_w_, action_b_;
};

/// Sum of head cross-entropies plus the weighted attention term. InvalidLabel
/// for out-of-range labels.
double loss(const ForwardOutputs& out, const Labels& labels,
            const LossWeights& weights = {});

/// P(a_i) = softmax(action_logits); the chosen action and target region are
/// argmaxes with lowest-index tie-break.
CorrectionRecommendation recommend_action(const ForwardOutputs& out);

/// Lowest index attaining the maximum.
int argmax(std::span<const double> values);

}  // namespace h2r::model
