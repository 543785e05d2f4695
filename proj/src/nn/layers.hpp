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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "nn/tensor.hpp"

namespace h2r::nn {

/// A named trainable tensor and its accumulated gradient.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor value)
      : name(std::move(name)), value(std::move(value)), grad(this->value.shape()) {}

  void zero_grad() { grad.fill(0.0); }

  std::string name;
  Tensor value;
  Tensor grad;
};

/// Sum whose result does not depend on the order of the terms: the terms are
/// sorted before being added. Used wherever a reduction runs over attention
/// regions, so permuting regions permutes outputs bit-for-bit.
double canonical_sum(std::span<const double> terms);

// Every backward function accumulates (+=) into the gradient tensors it is
// handed; nullptr skips that gradient.

/// a[m x k] * b[k x n]. A rank-1 `a` is treated as a single row and yields a
/// rank-1 result.
Tensor matmul(const Tensor& a, const Tensor& b);
void matmul_backward(const Tensor& a, const Tensor& b, const Tensor& dout,
                     Tensor* da, Tensor* db);

/// Adds bias[n] to every length-n row of x.
Tensor add_bias(const Tensor& x, const Tensor& bias);
void add_bias_backward(const Tensor& dout, Tensor* dx, Tensor* dbias);

Tensor tanh_forward(const Tensor& x);
/// Takes the forward output y, not the input.
Tensor tanh_backward(const Tensor& y, const Tensor& dy);

Tensor sigmoid_forward(const Tensor& x);
Tensor sigmoid_backward(const Tensor& y, const Tensor& dy);

/// Softmax of a rank-1 tensor (axis 0) or along either axis of a rank-2
/// tensor. Max-shifted; normalizer via canonical_sum.
Tensor softmax(const Tensor& x, std::size_t axis);
Tensor softmax_backward(const Tensor& y, const Tensor& dy, std::size_t axis);

/// Gathers rows of table[V x D]; ids outside [0, V) throw InvalidToken.
Tensor embedding(const Tensor& table, std::span<const int> ids);
void embedding_backward(std::span<const int> ids, const Tensor& dout,
                        Tensor& dtable);

/// 3x3 convolution, stride 1, zero padding 1.
///   x: [C x H x W], w: [O x C x 3 x 3], b: [O]  ->  [O x H x W]
Tensor conv2d_3x3(const Tensor& x, const Tensor& w, const Tensor& b);
void conv2d_3x3_backward(const Tensor& x, const Tensor& w, const Tensor& dout,
                         Tensor* dx, Tensor* dw, Tensor* db);

struct MaxPoolResult {
  Tensor out;
  std::vector<std::size_t> argmax;  // flat input index per output element
};

/// 2x2 max pooling, stride 2, over [C x H x W] with even H, W. Ties resolve
/// to the first element in row-major window order.
MaxPoolResult maxpool2x2(const Tensor& x);
Tensor maxpool2x2_backward(const Shape& input_shape,
                           std::span<const std::size_t> argmax,
                           const Tensor& dout);

struct LstmCache {
  Tensor x, h_prev, c_prev;
  Tensor i, f, g, o;  // gate activations
  Tensor c, tanh_c;
};

struct LstmState {
  Tensor h;
  Tensor c;
};

/// One LSTM step with gate layout [input, forget, cell, output]:
///   z = x Wx + h Wh + b,  c' = f*c + i*g,  h' = o*tanh(c').
/// x: [D], h, c: [H], wx: [D x 4H], wh: [H x 4H], b: [4H].
LstmState lstm_cell(const Tensor& x, const Tensor& h, const Tensor& c,
                    const Tensor& wx, const Tensor& wh, const Tensor& b,
                    LstmCache* cache);

struct LstmInputGrads {
  Tensor dx, dh_prev, dc_prev;
};

LstmInputGrads lstm_cell_backward(const LstmCache& cache, const Tensor& wx,
                                  const Tensor& wh, const Tensor& dh,
                                  const Tensor& dc, Tensor* dwx, Tensor* dwh,
                                  Tensor* db);

/// -log softmax(logits)[label]; InvalidLabel when label is out of range.
double cross_entropy(const Tensor& logits, std::size_t label);
/// Gradient of cross_entropy w.r.t. logits: softmax(logits) - onehot(label).
Tensor cross_entropy_backward(const Tensor& logits, std::size_t label);

}  // namespace h2r::nn
