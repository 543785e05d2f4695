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
#include <functional>
#include <span>
#include <string>

#include "common/rng.hpp"
#include "nn/layers.hpp"

namespace h2r::nn {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t coordinates = 0;
  double tolerance = 0.0;

  bool passed() const { return max_rel_err < tolerance; }
};

/// Scalar loss over the current parameter values. With `backprop` set it must
/// also accumulate the analytic gradient into each Parameter::grad (the
/// checker zeroes them first).
using LossFn = std::function<double(bool backprop)>;

struct GradCheckOptions {
  double step = 1e-5;
  std::size_t coords_per_param = 200;
  std::uint64_t seed = 0;
};

/// Central differences on a random subset of coordinates of each parameter
/// (every coordinate when the parameter is smaller than the cap).
/// Relative error is |a - n| / max(1e-8, |a| + |n|).
GradCheckReport grad_check(const LossFn& loss, std::span<Parameter* const> params,
                           double tolerance, const GradCheckOptions& options = {});

}  // namespace h2r::nn
