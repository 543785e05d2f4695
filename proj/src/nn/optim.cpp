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

#include "nn/optim.hpp"

#include <cmath>

#include "common/error.hpp"

namespace h2r::nn {

std::pair<double, double> fans(const Shape& shape) {
  if (shape.size() == 1) return {double(shape[0]), double(shape[0])};
  if (shape.size() == 2) return {double(shape[0]), double(shape[1])};
  if (shape.size() == 4) {
    const double receptive = double(shape[2] * shape[3]);
    return {double(shape[1]) * receptive, double(shape[0]) * receptive};
  }
  fail(ErrorCode::kShapeMismatch,
       "no fan rule for shape " + shape_to_string(shape));
}

Parameter init_parameter(std::string name, Shape shape, InitScheme scheme,
                         Rng& rng) {
  Tensor value(shape);
  if (scheme != InitScheme::kZeros) {
    const auto [fan_in, fan_out] = fans(shape);
    const double bound = scheme == InitScheme::kXavier
                             ? std::sqrt(6.0 / (fan_in + fan_out))
                             : std::sqrt(6.0 / fan_in);
    for (double& v : value.data()) v = rng.uniform(-bound, bound);
  }
  return Parameter(std::move(name), std::move(value));
}

void Adam::step(std::span<Parameter* const> params) {
  if (m_.empty()) {
    for (const Parameter* p : params) {
      m_.emplace_back(p->value.shape());
      v_.emplace_back(p->value.shape());
    }
  }
  if (m_.size() != params.size()) {
    fail(ErrorCode::kShapeMismatch, "Adam: parameter list changed size");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(options_.beta1, double(t_));
  const double c2 = 1.0 - std::pow(options_.beta2, double(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * g;
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p.value[i] -= options_.lr * m_hat / (std::sqrt(v_hat) + options_.eps);
    }
  }
}

}  // namespace h2r::nn
