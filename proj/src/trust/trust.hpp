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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace h2r::trust {

inline constexpr int kLevels = 5;
inline constexpr int kCases = 4;

enum class Phase { kBefore = 0, kAfter = 1 };

std::string_view to_string(Phase phase);
std::optional<Phase> parse_phase(std::string_view name);

/// 1 Completely Distrust, 2 Distrust, 3 Neutral, 4 Trust, 5 Completely Trust.
std::string_view level_label(int level);

struct TrustRecord {
  int participant_id = 0;
  int case_id = 1;  // 1..4; cases 1-2 kitchen, 3-4 factory
  Phase phase = Phase::kBefore;
  int level = 1;  // 1..5
  bool operator==(const TrustRecord&) const = default;
};

/// Response counts per level; index 0 holds level 1.
struct TrustHistogram {
  std::array<long long, kLevels> counts{};
  long long total() const;
};

TrustHistogram histogram_of(std::span<const int> levels);

/// Unit-variance Gaussian mixture over the level scores 1..5 weighted by the
/// response proportions:  sum_i (N_i / N) * exp(-(x - i)^2 / 2) / sqrt(2 pi).
/// EmptyHistogram when N = 0.
double mixture_density(const TrustHistogram& hist, double x);

struct CurvePoint {
  double x = 0.0;
  double density = 0.0;
};

/// Inclusive grid x_min, x_min + step, ..., x_max with
/// round((x_max - x_min) / step) + 1 points. BadRange unless x_min < x_max and
/// step > 0.
std::vector<CurvePoint> curve_samples(const TrustHistogram& hist, double x_min = -2.0,
                                      double x_max = 8.0, double step = 0.05);

enum class UTestMethod { kExactEnumeration, kNormalApprox };
std::string_view to_string(UTestMethod method);

struct UTestResult {
  double u = 0.0;  // U of the first sample
  double p_two_sided = 1.0;
  UTestMethod method = UTestMethod::kExactEnumeration;
};

/// Two-sided Mann-Whitney U test with mid-ranks for ties. Exact enumeration
/// of all C(n1 + n2, n1) label assignments when min(n1, n2) <= 8 and
/// n1 + n2 <= 16; otherwise the normal approximation with tie-corrected
/// variance and a 0.5 continuity correction. `method` overrides that choice.
/// EmptySample if either sample is empty.
UTestResult mann_whitney(std::span<const double> a, std::span<const double> b,
                         std::optional<UTestMethod> method = std::nullopt);
UTestResult mann_whitney(std::span<const int> a, std::span<const int> b,
                         std::optional<UTestMethod> method = std::nullopt);

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  int median_level = 0;  // lower median
  TrustHistogram histogram;
};

/// NoRecords when no record matches.
Summary summarize(std::span<const TrustRecord> records, int case_id, Phase phase);

struct Restoration {
  double ratio_simple = 0.0;  // mean_after / t_init
  double ratio_gain = 0.0;    // (mean_after - mean_before) / (t_init - mean_before)
};

/// DegenerateBaseline when t_init <= mean_before.
Restoration restoration_ratio(double mean_after, double mean_before, double t_init = 4.5);

/// Level distribution on the 0.001 simplex grid whose mean is nearest the
/// target, subject to P(level < median) <= 0.49 and P(level <= median) >= 0.5.
/// The lexicographically smallest optimum is returned. Infeasible when no grid
/// distribution satisfying the median constraint has a mean within half a
/// grid step (0.0005) of the target.
std::array<double, kLevels> fit_profile(double target_mean, int target_median);

struct ProfileTarget {
  double mean = 0.0;
  int median = 0;
};

/// Published per-case averages and medians used by the synthetic cohort.
ProfileTarget reference_target(int case_id, Phase phase);

/// n participants (ids 1..n), each reporting one before and one after level
/// for every case. Per (case, phase) the level counts are the largest
/// remainder rounding of n * fit_profile(target); the levels are then dealt
/// to participants in an order shuffled from mix(seed, 2 * (case - 1) + phase).
std::vector<TrustRecord> synth_cohort(int n, std::uint64_t seed);

/// CSV with header participant_id,case_id,phase,level.
void write_records(std::ostream& out, std::span<const TrustRecord> records);
std::string records_to_csv(std::span<const TrustRecord> records);

/// MalformedData naming the line for a bad header, bad row, out-of-range
/// value, duplicate (participant, case, phase), or a file with no rows.
std::vector<TrustRecord> read_records(std::istream& in);

/// Summaries for every (case, phase) present, the before/after test per
/// case, the 1 vs 2, 3 vs 4 and kitchen vs factory comparisons within each
/// phase, and restoration ratios against t_init. Tests whose samples are
/// missing are listed with the reason they were skipped.
nlohmann::ordered_json analyze(std::span<const TrustRecord> records, double t_init = 4.5);

/// "x,density" CSV of curve_samples with default range.
std::string curve_csv(const TrustHistogram& hist);

}  // namespace h2r::trust
