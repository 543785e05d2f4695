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

#include "nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "common/error.hpp"

namespace h2r::nn {
namespace {

std::string shapes(const Tensor& a, const Tensor& b) {
  return shape_to_string(a.shape()) + " and " + shape_to_string(b.shape());
}

// Rows/cols view used by matmul for rank-1 and rank-2 inputs.
struct Matrix {
  std::size_t rows;
  std::size_t cols;
};

Matrix as_matrix(const Tensor& t, const char* where) {
  if (t.rank() == 1) return {1, t.dim(0)};
  if (t.rank() == 2) return {t.dim(0), t.dim(1)};
  fail(ErrorCode::kShapeMismatch,
       std::string(where) + ": expected rank 1 or 2, got " +
           shape_to_string(t.shape()));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

double canonical_sum(std::span<const double> terms) {
  double buffer[64];
  std::vector<double> heap;
  double* sorted = buffer;
  if (terms.size() > 64) {
    heap.assign(terms.begin(), terms.end());
    sorted = heap.data();
  } else {
    std::copy(terms.begin(), terms.end(), buffer);
  }
  std::sort(sorted, sorted + terms.size());
  double total = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) total += sorted[i];
  return total;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  const Matrix ma = as_matrix(a, "matmul");
  if (b.rank() != 2 || b.dim(0) != ma.cols) {
    fail(ErrorCode::kShapeMismatch, "matmul: " + shapes(a, b));
  }
  const std::size_t n = b.dim(1);
  Tensor out(a.rank() == 1 ? Shape{n} : Shape{ma.rows, n});
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  for (std::size_t r = 0; r < ma.rows; ++r) {
    double* orow = po + r * n;
    for (std::size_t k = 0; k < ma.cols; ++k) {
      const double av = pa[r * ma.cols + k];
      if (av == 0.0) continue;
      const double* brow = pb + k * n;
      for (std::size_t c = 0; c < n; ++c) orow[c] += av * brow[c];
    }
  }
  return out;
}

void matmul_backward(const Tensor& a, const Tensor& b, const Tensor& dout,
                     Tensor* da, Tensor* db) {
  const Matrix ma = as_matrix(a, "matmul_backward");
  const std::size_t n = b.dim(1);
  if (dout.size() != ma.rows * n) {
    fail(ErrorCode::kShapeMismatch, "matmul_backward: " + shapes(dout, b));
  }
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  const double* pd = dout.data().data();
  if (da) {
    expect_same_shape(*da, a, "matmul_backward da");
    double* pda = da->data().data();
    for (std::size_t r = 0; r < ma.rows; ++r) {
      for (std::size_t k = 0; k < ma.cols; ++k) {
        const double* brow = pb + k * n;
        const double* drow = pd + r * n;
        double acc = 0.0;
        for (std::size_t c = 0; c < n; ++c) acc += drow[c] * brow[c];
        pda[r * ma.cols + k] += acc;
      }
    }
  }
  if (db) {
    expect_same_shape(*db, b, "matmul_backward db");
    double* pdb = db->data().data();
    for (std::size_t r = 0; r < ma.rows; ++r) {
      const double* drow = pd + r * n;
      for (std::size_t k = 0; k < ma.cols; ++k) {
        const double av = pa[r * ma.cols + k];
        if (av == 0.0) continue;
        double* dbrow = pdb + k * n;
        for (std::size_t c = 0; c < n; ++c) dbrow[c] += av * drow[c];
      }
    }
  }
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  if (bias.rank() != 1 || x.empty() || x.shape().back() != bias.dim(0)) {
    fail(ErrorCode::kShapeMismatch, "add_bias: " + shapes(x, bias));
  }
  Tensor out = x;
  const std::size_t n = bias.dim(0);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bias[i % n];
  return out;
}

void add_bias_backward(const Tensor& dout, Tensor* dx, Tensor* dbias) {
  if (dx) accumulate(*dx, dout);
  if (dbias) {
    const std::size_t n = dbias->size();
    if (dout.shape().back() != n) {
      fail(ErrorCode::kShapeMismatch, "add_bias_backward: " + shapes(dout, *dbias));
    }
    for (std::size_t i = 0; i < dout.size(); ++i) (*dbias)[i % n] += dout[i];
  }
}

Tensor tanh_forward(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data()) v = std::tanh(v);
  return y;
}

Tensor tanh_backward(const Tensor& y, const Tensor& dy) {
  expect_same_shape(y, dy, "tanh_backward");
  Tensor dx(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] = dy[i] * (1.0 - y[i] * y[i]);
  return dx;
}

Tensor sigmoid_forward(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data()) v = sigmoid(v);
  return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& dy) {
  expect_same_shape(y, dy, "sigmoid_backward");
  Tensor dx(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] = dy[i] * y[i] * (1.0 - y[i]);
  return dx;
}

namespace {

// Visits each softmax lane as (offset, stride, length).
template <typename Fn>
void for_each_lane(const Shape& shape, std::size_t axis, Fn&& fn) {
  if (shape.size() == 1 && axis == 0) {
    fn(std::size_t{0}, std::size_t{1}, shape[0]);
    return;
  }
  if (shape.size() == 2 && axis < 2) {
    const std::size_t rows = shape[0], cols = shape[1];
    if (axis == 1) {
      for (std::size_t r = 0; r < rows; ++r) fn(r * cols, std::size_t{1}, cols);
    } else {
      for (std::size_t c = 0; c < cols; ++c) fn(c, cols, rows);
    }
    return;
  }
  fail(ErrorCode::kShapeMismatch, "softmax: axis " + std::to_string(axis) +
                                      " invalid for " + shape_to_string(shape));
}

}  // namespace

Tensor softmax(const Tensor& x, std::size_t axis) {
  Tensor y(x.shape());
  std::vector<double> terms;
  for_each_lane(x.shape(), axis,
                [&](std::size_t offset, std::size_t stride, std::size_t len) {
                  double max = -std::numeric_limits<double>::infinity();
                  for (std::size_t k = 0; k < len; ++k) {
                    max = std::max(max, x[offset + k * stride]);
                  }
                  terms.resize(len);
                  for (std::size_t k = 0; k < len; ++k) {
                    terms[k] = std::exp(x[offset + k * stride] - max);
                  }
                  const double z = canonical_sum(terms);
                  for (std::size_t k = 0; k < len; ++k) {
                    y[offset + k * stride] = terms[k] / z;
                  }
                });
  return y;
}

Tensor softmax_backward(const Tensor& y, const Tensor& dy, std::size_t axis) {
  expect_same_shape(y, dy, "softmax_backward");
  Tensor dx(y.shape());
  for_each_lane(y.shape(), axis,
                [&](std::size_t offset, std::size_t stride, std::size_t len) {
                  double dot = 0.0;
                  for (std::size_t k = 0; k < len; ++k) {
                    const std::size_t i = offset + k * stride;
                    dot += dy[i] * y[i];
                  }
                  for (std::size_t k = 0; k < len; ++k) {
                    const std::size_t i = offset + k * stride;
                    dx[i] = y[i] * (dy[i] - dot);
                  }
                });
  return dx;
}

Tensor embedding(const Tensor& table, std::span<const int> ids) {
  if (table.rank() != 2) {
    fail(ErrorCode::kShapeMismatch,
         "embedding: table must be rank 2, got " + shape_to_string(table.shape()));
  }
  const std::size_t vocab = table.dim(0), width = table.dim(1);
  Tensor out({ids.size(), width});
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] < 0 || static_cast<std::size_t>(ids[t]) >= vocab) {
      fail(ErrorCode::kInvalidToken, "token id " + std::to_string(ids[t]) +
                                         " outside vocabulary of size " +
                                         std::to_string(vocab));
    }
    const auto src = table.row(static_cast<std::size_t>(ids[t]));
    std::copy(src.begin(), src.end(), out.row(t).begin());
  }
  return out;
}

void embedding_backward(std::span<const int> ids, const Tensor& dout,
                        Tensor& dtable) {
  for (std::size_t t = 0; t < ids.size(); ++t) {
    auto dst = dtable.row(static_cast<std::size_t>(ids[t]));
    const auto src = dout.row(t);
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }
}

Tensor conv2d_3x3(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rank() != 3 || w.rank() != 4 || w.dim(1) != x.dim(0) || w.dim(2) != 3 ||
      w.dim(3) != 3 || b.rank() != 1 || b.dim(0) != w.dim(0)) {
    fail(ErrorCode::kShapeMismatch,
         "conv2d_3x3: input " + shape_to_string(x.shape()) + ", weight " +
             shape_to_string(w.shape()) + ", bias " + shape_to_string(b.shape()));
  }
  const std::size_t channels = x.dim(0), height = x.dim(1), width = x.dim(2);
  const std::size_t outs = w.dim(0);
  Tensor out({outs, height, width});
  const double* px = x.data().data();
  const double* pw = w.data().data();
  double* po = out.data().data();
  for (std::size_t o = 0; o < outs; ++o) {
    double* oplane = po + o * height * width;
    std::fill(oplane, oplane + height * width, b[o]);
    for (std::size_t c = 0; c < channels; ++c) {
      const double* xplane = px + c * height * width;
      const double* kernel = pw + (o * channels + c) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double kv = kernel[ky * 3 + kx];
          if (kv == 0.0) continue;
          for (std::size_t y = 0; y < height; ++y) {
            const long sy = static_cast<long>(y) + ky - 1;
            if (sy < 0 || sy >= static_cast<long>(height)) continue;
            const double* xrow = xplane + static_cast<std::size_t>(sy) * width;
            double* orow = oplane + y * width;
            const std::size_t x0 = kx == 0 ? 1 : 0;
            const std::size_t x1 = kx == 2 ? width - 1 : width;
            for (std::size_t xx = x0; xx < x1; ++xx) {
              orow[xx] += kv * xrow[xx + kx - 1];
            }
          }
        }
      }
    }
  }
  return out;
}

void conv2d_3x3_backward(const Tensor& x, const Tensor& w, const Tensor& dout,
                         Tensor* dx, Tensor* dw, Tensor* db) {
  const std::size_t channels = x.dim(0), height = x.dim(1), width = x.dim(2);
  const std::size_t outs = w.dim(0);
  if (dout.rank() != 3 || dout.dim(0) != outs || dout.dim(1) != height ||
      dout.dim(2) != width) {
    fail(ErrorCode::kShapeMismatch, "conv2d_3x3_backward: " + shapes(dout, x));
  }
  const double* px = x.data().data();
  const double* pw = w.data().data();
  const double* pd = dout.data().data();
  for (std::size_t o = 0; o < outs; ++o) {
    const double* dplane = pd + o * height * width;
    if (db) {
      double acc = 0.0;
      for (std::size_t i = 0; i < height * width; ++i) acc += dplane[i];
      (*db)[o] += acc;
    }
    for (std::size_t c = 0; c < channels; ++c) {
      const double* xplane = px + c * height * width;
      const double* kernel = pw + (o * channels + c) * 9;
      double* dkernel = dw ? dw->data().data() + (o * channels + c) * 9 : nullptr;
      double* dxplane = dx ? dx->data().data() + c * height * width : nullptr;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double kv = kernel[ky * 3 + kx];
          double kacc = 0.0;
          for (std::size_t y = 0; y < height; ++y) {
            const long sy = static_cast<long>(y) + ky - 1;
            if (sy < 0 || sy >= static_cast<long>(height)) continue;
            const std::size_t srow = static_cast<std::size_t>(sy) * width;
            const double* drow = dplane + y * width;
            const std::size_t x0 = kx == 0 ? 1 : 0;
            const std::size_t x1 = kx == 2 ? width - 1 : width;
            for (std::size_t xx = x0; xx < x1; ++xx) {
              const std::size_t si = srow + xx + kx - 1;
              kacc += drow[xx] * xplane[si];
              if (dxplane) dxplane[si] += drow[xx] * kv;
            }
          }
          if (dkernel) dkernel[ky * 3 + kx] += kacc;
        }
      }
    }
  }
}

MaxPoolResult maxpool2x2(const Tensor& x) {
  if (x.rank() != 3 || x.dim(1) % 2 != 0 || x.dim(2) % 2 != 0) {
    fail(ErrorCode::kShapeMismatch,
         "maxpool2x2: expected [C x even H x even W], got " +
             shape_to_string(x.shape()));
  }
  const std::size_t channels = x.dim(0), height = x.dim(1), width = x.dim(2);
  MaxPoolResult result{Tensor({channels, height / 2, width / 2}), {}};
  result.argmax.resize(result.out.size());
  std::size_t k = 0;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t y = 0; y < height; y += 2) {
      for (std::size_t xx = 0; xx < width; xx += 2) {
        std::size_t best = (c * height + y) * width + xx;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t i = (c * height + y + dy) * width + xx + dx;
            if (x[i] > x[best]) best = i;
          }
        }
        result.out[k] = x[best];
        result.argmax[k] = best;
        ++k;
      }
    }
  }
  return result;
}

Tensor maxpool2x2_backward(const Shape& input_shape,
                           std::span<const std::size_t> argmax,
                           const Tensor& dout) {
  if (argmax.size() != dout.size()) {
    fail(ErrorCode::kShapeMismatch, "maxpool2x2_backward: argmax/dout size");
  }
  Tensor dx(input_shape);
  for (std::size_t k = 0; k < argmax.size(); ++k) dx[argmax[k]] += dout[k];
  return dx;
}

LstmState lstm_cell(const Tensor& x, const Tensor& h, const Tensor& c,
                    const Tensor& wx, const Tensor& wh, const Tensor& b,
                    LstmCache* cache) {
  const std::size_t hidden = h.size();
  if (c.size() != hidden || wx.rank() != 2 || wx.dim(0) != x.size() ||
      wx.dim(1) != 4 * hidden || wh.rank() != 2 || wh.dim(0) != hidden ||
      wh.dim(1) != 4 * hidden || b.size() != 4 * hidden) {
    fail(ErrorCode::kShapeMismatch,
         "lstm_cell: x " + shape_to_string(x.shape()) + ", h " +
             shape_to_string(h.shape()) + ", wx " + shape_to_string(wx.shape()) +
             ", wh " + shape_to_string(wh.shape()) + ", b " +
             shape_to_string(b.shape()));
  }
  Tensor z = matmul(x, wx);
  accumulate(z, matmul(h, wh));
  accumulate(z, b);

  Tensor gi({hidden}), gf({hidden}), gg({hidden}), go({hidden});
  for (std::size_t k = 0; k < hidden; ++k) {
    gi[k] = sigmoid(z[k]);
    gf[k] = sigmoid(z[hidden + k]);
    gg[k] = std::tanh(z[2 * hidden + k]);
    go[k] = sigmoid(z[3 * hidden + k]);
  }
  LstmState next{Tensor({hidden}), Tensor({hidden})};
  Tensor tanh_c({hidden});
  for (std::size_t k = 0; k < hidden; ++k) {
    next.c[k] = gf[k] * c[k] + gi[k] * gg[k];
    tanh_c[k] = std::tanh(next.c[k]);
    next.h[k] = go[k] * tanh_c[k];
  }
  if (cache) {
    *cache = LstmCache{x, h, c, std::move(gi), std::move(gf), std::move(gg),
                       std::move(go), next.c, std::move(tanh_c)};
  }
  return next;
}

LstmInputGrads lstm_cell_backward(const LstmCache& cache, const Tensor& wx,
                                  const Tensor& wh, const Tensor& dh,
                                  const Tensor& dc, Tensor* dwx, Tensor* dwh,
                                  Tensor* db) {
  const std::size_t hidden = cache.h_prev.size();
  Tensor dz({4 * hidden});
  LstmInputGrads grads{Tensor(cache.x.shape()), Tensor({hidden}), Tensor({hidden})};
  for (std::size_t k = 0; k < hidden; ++k) {
    const double dct =
        dc[k] + dh[k] * cache.o[k] * (1.0 - cache.tanh_c[k] * cache.tanh_c[k]);
    const double di = dct * cache.g[k];
    const double df = dct * cache.c_prev[k];
    const double dg = dct * cache.i[k];
    const double dout = dh[k] * cache.tanh_c[k];
    dz[k] = di * cache.i[k] * (1.0 - cache.i[k]);
    dz[hidden + k] = df * cache.f[k] * (1.0 - cache.f[k]);
    dz[2 * hidden + k] = dg * (1.0 - cache.g[k] * cache.g[k]);
    dz[3 * hidden + k] = dout * cache.o[k] * (1.0 - cache.o[k]);
    grads.dc_prev[k] = dct * cache.f[k];
  }
  matmul_backward(cache.x, wx, dz, &grads.dx, dwx);
  matmul_backward(cache.h_prev, wh, dz, &grads.dh_prev, dwh);
  if (db) accumulate(*db, dz);
  return grads;
}

double cross_entropy(const Tensor& logits, std::size_t label) {
  if (logits.rank() != 1) {
    fail(ErrorCode::kShapeMismatch,
         "cross_entropy: logits must be rank 1, got " +
             shape_to_string(logits.shape()));
  }
  if (label >= logits.size()) {
    fail(ErrorCode::kInvalidLabel, "label " + std::to_string(label) +
                                       " outside [0, " +
                                       std::to_string(logits.size()) + ")");
  }
  // log1p over the non-maximal terms keeps full relative precision when the
  // prediction is confident and the loss is small.
  std::size_t top = 0;
  for (std::size_t k = 1; k < logits.size(); ++k) {
    if (logits[k] > logits[top]) top = k;
  }
  const double max = logits[top];
  std::vector<double> terms;
  terms.reserve(logits.size() - 1);
  for (std::size_t k = 0; k < logits.size(); ++k) {
    if (k != top) terms.push_back(std::exp(logits[k] - max));
  }
  return std::log1p(canonical_sum(terms)) + (max - logits[label]);
}

Tensor cross_entropy_backward(const Tensor& logits, std::size_t label) {
  if (label >= logits.size()) {
    fail(ErrorCode::kInvalidLabel, "label " + std::to_string(label) +
                                       " outside [0, " +
                                       std::to_string(logits.size()) + ")");
  }
  Tensor grad = softmax(logits, 0);
  grad[label] -= 1.0;
  return grad;
}

}  // namespace h2r::nn
