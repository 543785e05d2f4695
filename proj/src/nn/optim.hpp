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

#include <span>
#include <string>
#include <vector>

#include "common/rng.hpp"
#include "nn/layers.hpp"

namespace h2r::nn {

enum class InitScheme { kXavier, kHe, kZeros };

/// Fan-in/fan-out: [in x out] for matrices, [out x in x kh x kw] for conv
/// kernels, n/n for vectors.
std::pair<double, double> fans(const Shape& shape);

/// Xavier uniform: U(-b, b), b = sqrt(6 / (fan_in + fan_out)).
/// He uniform:     U(-b, b), b = sqrt(6 / fan_in).
Parameter init_parameter(std::string name, Shape shape, InitScheme scheme,
                         Rng& rng);

/// Adam with bias correction. Moment buffers are keyed by position in the
/// parameter list handed to step(), which must not change between calls.
class Adam {
 public:
  struct Options {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  explicit Adam(Options options) : options_(options) {}

  /// Applies one update (t increments first, so the first call uses t = 1).
  void step(std::span<Parameter* const> params);

  long long t() const { return t_; }

 private:
  Options options_;
  long long t_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace h2r::nn
