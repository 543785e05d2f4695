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

#include "nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace h2r::nn {

GradCheckReport grad_check(const LossFn& loss, std::span<Parameter* const> params,
                           double tolerance, const GradCheckOptions& options) {
  GradCheckReport report;
  report.tolerance = tolerance;
  if (params.empty()) return report;

  for (Parameter* p : params) p->zero_grad();
  loss(true);

  Rng rng(options.seed);
  for (Parameter* p : params) {
    std::vector<std::size_t> coords(p->value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (coords.size() > options.coords_per_param) {
      rng.shuffle(std::span<std::size_t>(coords));
      coords.resize(options.coords_per_param);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t i : coords) {
      const double saved = p->value[i];
      p->value[i] = saved + options.step;
      const double up = loss(false);
      p->value[i] = saved - options.step;
      const double down = loss(false);
      p->value[i] = saved;

      const double numeric = (up - down) / (2.0 * options.step);
      const double analytic = p->grad[i];
      const double rel = std::abs(analytic - numeric) /
                         std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      ++report.coordinates;
      if (report.worst_param.empty() || rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = p->name;
        report.worst_index = i;
      }
    }
  }
  return report;
}

}  // namespace h2r::nn
