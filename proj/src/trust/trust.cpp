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

#include "trust/trust.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace h2r::trust {

using nlohmann::ordered_json;

std::string_view to_string(Phase phase) {
  return phase == Phase::kBefore ? "before" : "after";
}

std::optional<Phase> parse_phase(std::string_view name) {
  if (name == "before") return Phase::kBefore;
  if (name == "after") return Phase::kAfter;
  return std::nullopt;
}

std::string_view level_label(int level) {
  static constexpr std::string_view kLabels[] = {"Completely Distrust", "Distrust", "Neutral",
                                                 "Trust", "Completely Trust"};
  if (level < 1 || level > kLevels) fail(ErrorCode::kBadRange, "trust level " + std::to_string(level));
  return kLabels[level - 1];
}

std::string_view to_string(UTestMethod method) {
  return method == UTestMethod::kExactEnumeration ? "exact_enumeration"
                                                  : "normal_approx_tie_corrected";
}

long long TrustHistogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), 0LL);
}

TrustHistogram histogram_of(std::span<const int> levels) {
  TrustHistogram h;
  for (int level : levels) {
    if (level < 1 || level > kLevels) fail(ErrorCode::kBadRange, "trust level " + std::to_string(level));
    ++h.counts[static_cast<std::size_t>(level - 1)];
  }
  return h;
}

double mixture_density(const TrustHistogram& hist, double x) {
  const long long n = hist.total();
  if (n == 0) fail(ErrorCode::kEmptyHistogram, "mixture density of an empty histogram");
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  double sum = 0.0;
  for (int i = 0; i < kLevels; ++i) {
    const double d = x - (i + 1);
    sum += static_cast<double>(hist.counts[static_cast<std::size_t>(i)]) / static_cast<double>(n) *
           std::exp(-0.5 * d * d) * norm;
  }
  return sum;
}

std::vector<CurvePoint> curve_samples(const TrustHistogram& hist, double x_min, double x_max,
                                      double step) {
  if (hist.total() == 0) fail(ErrorCode::kEmptyHistogram, "curve of an empty histogram");
  if (!(x_min < x_max) || !(step > 0.0)) {
    fail(ErrorCode::kBadRange, "curve range [" + std::to_string(x_min) + ", " +
                                   std::to_string(x_max) + "] step " + std::to_string(step));
  }
  const auto n = static_cast<std::size_t>(std::llround((x_max - x_min) / step)) + 1;
  std::vector<CurvePoint> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = x_min + static_cast<double>(i) * step;
    out.push_back({x, mixture_density(hist, x)});
  }
  return out;
}

namespace {

// Counts n1-subsets of the pooled doubled ranks whose |2U - n1 n2| reaches
// the observed deviation.
void enumerate_subsets(const std::vector<long long>& twice_ranks, std::size_t start,
                       std::size_t remaining, long long partial, long long n1,
                       long long n1n2, long long observed, long long& extreme,
                       long long& total) {
  if (remaining == 0) {
    const long long twice_u = partial - n1 * (n1 + 1);
    ++total;
    if (std::llabs(twice_u - n1n2) >= observed) ++extreme;
    return;
  }
  for (std::size_t i = start; i + remaining <= twice_ranks.size(); ++i) {
    enumerate_subsets(twice_ranks, i + 1, remaining - 1, partial + twice_ranks[i], n1, n1n2,
                      observed, extreme, total);
  }
}

}  // namespace

UTestResult mann_whitney(std::span<const double> a, std::span<const double> b,
                         std::optional<UTestMethod> method) {
  if (a.empty() || b.empty()) fail(ErrorCode::kEmptySample, "Mann-Whitney needs two nonempty samples");
  const std::size_t n1 = a.size(), n2 = b.size(), total_n = n1 + n2;
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::vector<std::size_t> order(total_n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return pooled[x] < pooled[y]; });

  // Mid-ranks, doubled so they stay integral.
  std::vector<long long> twice_ranks(total_n);
  long long tie_term = 0;
  for (std::size_t i = 0; i < total_n;) {
    std::size_t j = i + 1;
    while (j < total_n && pooled[order[j]] == pooled[order[i]]) ++j;
    for (std::size_t k = i; k < j; ++k) twice_ranks[order[k]] = static_cast<long long>(i + 1 + j);
    const auto t = static_cast<long long>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const auto ln1 = static_cast<long long>(n1), ln2 = static_cast<long long>(n2);
  const long long twice_rank_sum =
      std::accumulate(twice_ranks.begin(), twice_ranks.begin() + static_cast<long>(n1), 0LL);
  const long long twice_u = twice_rank_sum - ln1 * (ln1 + 1);

  UTestResult result;
  result.u = static_cast<double>(twice_u) / 2.0;
  const bool small = std::min(n1, n2) <= 8 && total_n <= 16;
  if (method.value_or(small ? UTestMethod::kExactEnumeration : UTestMethod::kNormalApprox) ==
      UTestMethod::kExactEnumeration) {
    long long extreme = 0, count = 0;
    enumerate_subsets(twice_ranks, 0, n1, 0, ln1, ln1 * ln2, std::llabs(twice_u - ln1 * ln2),
                      extreme, count);
    result.method = UTestMethod::kExactEnumeration;
    result.p_two_sided = static_cast<double>(extreme) / static_cast<double>(count);
    return result;
  }

  result.method = UTestMethod::kNormalApprox;
  const double nn = static_cast<double>(total_n);
  const double prod = static_cast<double>(ln1 * ln2);
  const double variance =
      prod / 12.0 * ((nn + 1.0) - static_cast<double>(tie_term) / (nn * (nn - 1.0)));
  if (!(variance > 0.0)) {
    result.p_two_sided = 1.0;
    return result;
  }
  const double deviation = std::fabs(result.u - prod / 2.0);
  const double z = (deviation - 0.5) / std::sqrt(variance);
  const double p = std::erfc(z / std::numbers::sqrt2);
  result.p_two_sided = std::clamp(p, std::numeric_limits<double>::min(), 1.0);
  return result;
}

UTestResult mann_whitney(std::span<const int> a, std::span<const int> b,
                         std::optional<UTestMethod> method) {
  const std::vector<double> da(a.begin(), a.end()), db(b.begin(), b.end());
  return mann_whitney(std::span<const double>(da), std::span<const double>(db), method);
}

namespace {

std::vector<int> levels_for(std::span<const TrustRecord> records, std::span<const int> cases,
                            Phase phase) {
  std::vector<int> out;
  for (const TrustRecord& r : records) {
    if (r.phase == phase && std::find(cases.begin(), cases.end(), r.case_id) != cases.end()) {
      out.push_back(r.level);
    }
  }
  return out;
}

}  // namespace

Summary summarize(std::span<const TrustRecord> records, int case_id, Phase phase) {
  const int cases[] = {case_id};
  std::vector<int> levels = levels_for(records, cases, phase);
  if (levels.empty()) {
    fail(ErrorCode::kNoRecords, "no records for case " + std::to_string(case_id) + " " +
                                    std::string(to_string(phase)));
  }
  Summary s;
  s.n = levels.size();
  s.histogram = histogram_of(levels);
  s.mean = static_cast<double>(std::accumulate(levels.begin(), levels.end(), 0LL)) /
           static_cast<double>(s.n);
  std::sort(levels.begin(), levels.end());
  s.median_level = levels[(s.n - 1) / 2];
  return s;
}

Restoration restoration_ratio(double mean_after, double mean_before, double t_init) {
  if (t_init <= mean_before) {
    fail(ErrorCode::kDegenerateBaseline, "initial trust " + std::to_string(t_init) +
                                             " does not exceed the before mean " +
                                             std::to_string(mean_before));
  }
  return {mean_after / t_init, (mean_after - mean_before) / (t_init - mean_before)};
}

namespace {

using Milli = std::array<int, kLevels>;

bool median_ok(const Milli& k, int median) {
  int below = 0;
  for (int i = 0; i < median - 1; ++i) below += k[static_cast<std::size_t>(i)];
  const int through = below + k[static_cast<std::size_t>(median - 1)];
  return below <= 490 && through >= 500;
}

// Lexicographically smallest (k1..k5), sum 1000, with sum_i i * k_i = weighted.
std::optional<Milli> smallest_with_sum(int weighted, int median) {
  for (int k1 = 0; k1 <= 1000; ++k1) {
    if (median >= 2 && k1 > 490) break;
    for (int k2 = 0; k1 + k2 <= 1000; ++k2) {
      if (median >= 3 && k1 + k2 > 490) break;
      const int lo = std::max(0, 4000 - weighted - 3 * k1 - 2 * k2);
      const int span = 5000 - weighted - 4 * k1 - 3 * k2;
      if (span < 0) continue;
      const int hi = std::min(1000 - k1 - k2, span / 2);
      for (int k3 = lo; k3 <= hi; ++k3) {
        const int k5 = weighted - 4000 + 3 * k1 + 2 * k2 + k3;
        const int k4 = 1000 - k1 - k2 - k3 - k5;
        const Milli k = {k1, k2, k3, k4, k5};
        if (k4 >= 0 && k5 >= 0 && median_ok(k, median)) return k;
      }
    }
  }
  return std::nullopt;
}

Milli fit_profile_milli(double target_mean, int target_median) {
  if (!(target_mean >= 1.0 && target_mean <= 5.0) || target_median < 1 ||
      target_median > kLevels) {
    fail(ErrorCode::kInfeasible, "profile target outside the level range");
  }
  const double scaled = target_mean * 1000.0;
  const int floor_sum = static_cast<int>(std::floor(scaled));
  std::vector<int> candidates;
  for (int s : {floor_sum, floor_sum + 1}) {
    if (s >= 1000 && s <= 5000 && std::fabs(s - scaled) <= 0.5 + 1e-9) candidates.push_back(s);
  }
  std::sort(candidates.begin(), candidates.end(), [&](int x, int y) {
    return std::make_pair(std::fabs(x - scaled), x) < std::make_pair(std::fabs(y - scaled), y);
  });
  std::optional<Milli> best;
  double best_distance = 0.0;
  for (int s : candidates) {
    const double distance = std::fabs(s - scaled);
    if (best && distance > best_distance + 1e-9) break;
    if (auto k = smallest_with_sum(s, target_median)) {
      if (!best || *k < *best) best = k;
      best_distance = distance;
    }
  }
  if (!best) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "no level distribution has mean %.3f and median %d",
                  target_mean, target_median);
    fail(ErrorCode::kInfeasible, buf);
  }
  return *best;
}

}  // namespace

std::array<double, kLevels> fit_profile(double target_mean, int target_median) {
  const Milli k = fit_profile_milli(target_mean, target_median);
  std::array<double, kLevels> p{};
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = k[i] / 1000.0;
  return p;
}

ProfileTarget reference_target(int case_id, Phase phase) {
  static constexpr ProfileTarget kBefore[] = {{1.336, 1}, {1.252, 1}, {1.510, 2}, {1.600, 2}};
  static constexpr ProfileTarget kAfter[] = {{4.174, 4}, {4.148, 4}, {4.187, 4}, {4.194, 4}};
  if (case_id < 1 || case_id > kCases) fail(ErrorCode::kBadRange, "case " + std::to_string(case_id));
  return phase == Phase::kBefore ? kBefore[case_id - 1] : kAfter[case_id - 1];
}

std::vector<TrustRecord> synth_cohort(int n, std::uint64_t seed) {
  if (n < 1) fail(ErrorCode::kUsage, "cohort size must be at least 1");
  std::vector<TrustRecord> out;
  out.reserve(static_cast<std::size_t>(n) * kCases * 2);
  for (int case_id = 1; case_id <= kCases; ++case_id) {
    for (Phase phase : {Phase::kBefore, Phase::kAfter}) {
      const ProfileTarget target = reference_target(case_id, phase);
      const Milli k = fit_profile_milli(target.mean, target.median);

      // Largest-remainder counts; ties go to the lower level.
      std::array<long long, kLevels> counts{};
      std::array<long long, kLevels> remainder{};
      long long assigned = 0;
      for (std::size_t i = 0; i < kLevels; ++i) {
        counts[i] = static_cast<long long>(n) * k[i] / 1000;
        remainder[i] = static_cast<long long>(n) * k[i] % 1000;
        assigned += counts[i];
      }
      std::array<std::size_t, kLevels> by_remainder = {0, 1, 2, 3, 4};
      std::stable_sort(by_remainder.begin(), by_remainder.end(),
                       [&](std::size_t x, std::size_t y) { return remainder[x] > remainder[y]; });
      for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++counts[by_remainder[i]];

      std::vector<int> levels;
      for (std::size_t i = 0; i < kLevels; ++i) {
        levels.insert(levels.end(), static_cast<std::size_t>(counts[i]), static_cast<int>(i) + 1);
      }
      Rng rng(mix_seed(seed, static_cast<std::uint64_t>(2 * (case_id - 1) + static_cast<int>(phase))));
      rng.shuffle(std::span<int>(levels));
      for (int p = 0; p < n; ++p) {
        out.push_back({p + 1, case_id, phase, levels[static_cast<std::size_t>(p)]});
      }
    }
  }
  return out;
}

void write_records(std::ostream& out, std::span<const TrustRecord> records) {
  out << "participant_id,case_id,phase,level\n";
  for (const TrustRecord& r : records) {
    out << r.participant_id << ',' << r.case_id << ',' << to_string(r.phase) << ',' << r.level
        << '\n';
  }
}

std::string records_to_csv(std::span<const TrustRecord> records) {
  std::ostringstream out;
  write_records(out, records);
  return out.str();
}

namespace {

[[noreturn]] void bad_row(std::size_t line_no, const std::string& what) {
  fail(ErrorCode::kMalformedData, "line " + std::to_string(line_no) + ": " + what);
}

int parse_int(const std::string& field, std::size_t line_no, const char* name) {
  std::size_t used = 0;
  int value = 0;
  try {
    value = std::stoi(field, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (field.empty() || used != field.size()) {
    bad_row(line_no, std::string(name) + " '" + field + "' is not an integer");
  }
  return value;
}

}  // namespace

std::vector<TrustRecord> read_records(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next_line()) fail(ErrorCode::kMalformedData, "empty trust record file");
  if (line != "participant_id,case_id,phase,level") {
    bad_row(line_no, "expected header participant_id,case_id,phase,level");
  }
  std::vector<TrustRecord> out;
  std::set<std::tuple<int, int, int>> seen;
  while (next_line()) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream row(line);
    for (std::string f; std::getline(row, f, ',');) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != 4) bad_row(line_no, "expected 4 fields, got " + std::to_string(fields.size()));
    TrustRecord r;
    r.participant_id = parse_int(fields[0], line_no, "participant_id");
    r.case_id = parse_int(fields[1], line_no, "case_id");
    const auto phase = parse_phase(fields[2]);
    if (!phase) bad_row(line_no, "phase '" + fields[2] + "' is not before|after");
    r.phase = *phase;
    r.level = parse_int(fields[3], line_no, "level");
    if (r.case_id < 1 || r.case_id > kCases) bad_row(line_no, "case_id outside 1..4");
    if (r.level < 1 || r.level > kLevels) bad_row(line_no, "level outside 1..5");
    if (!seen.emplace(r.participant_id, r.case_id, static_cast<int>(r.phase)).second) {
      bad_row(line_no, "duplicate record for participant " + std::to_string(r.participant_id));
    }
    out.push_back(r);
  }
  if (out.empty()) fail(ErrorCode::kMalformedData, "trust record file has no rows");
  return out;
}

namespace {

ordered_json test_entry(std::span<const TrustRecord> records, std::vector<int> cases_a,
                        Phase phase_a, std::vector<int> cases_b, Phase phase_b) {
  ordered_json j;
  j["cases_a"] = cases_a;
  j["phase_a"] = to_string(phase_a);
  j["cases_b"] = cases_b;
  j["phase_b"] = to_string(phase_b);
  const std::vector<int> a = levels_for(records, cases_a, phase_a);
  const std::vector<int> b = levels_for(records, cases_b, phase_b);
  j["n_a"] = a.size();
  j["n_b"] = b.size();
  if (a.empty() || b.empty()) {
    j["skipped"] = a.empty() ? "no records in the first sample" : "no records in the second sample";
    return j;
  }
  const auto mean = [](const std::vector<int>& v) {
    return static_cast<double>(std::accumulate(v.begin(), v.end(), 0LL)) /
           static_cast<double>(v.size());
  };
  const UTestResult r = mann_whitney(std::span<const int>(a), std::span<const int>(b));
  j["mean_a"] = mean(a);
  j["mean_b"] = mean(b);
  j["u"] = r.u;
  j["p_two_sided"] = r.p_two_sided;
  j["method"] = to_string(r.method);
  return j;
}

ordered_json restoration_entry(std::span<const TrustRecord> records, const std::vector<int>& cases,
                               double t_init) {
  ordered_json j;
  j["cases"] = cases;
  const std::vector<int> before = levels_for(records, cases, Phase::kBefore);
  const std::vector<int> after = levels_for(records, cases, Phase::kAfter);
  if (before.empty() || after.empty()) {
    j["skipped"] = "needs both before and after records";
    return j;
  }
  const auto mean = [](const std::vector<int>& v) {
    return static_cast<double>(std::accumulate(v.begin(), v.end(), 0LL)) /
           static_cast<double>(v.size());
  };
  const double mb = mean(before), ma = mean(after);
  j["mean_before"] = mb;
  j["mean_after"] = ma;
  if (t_init <= mb) {
    j["skipped"] = "initial trust does not exceed the before mean";
    return j;
  }
  const Restoration r = restoration_ratio(ma, mb, t_init);
  j["ratio_simple"] = r.ratio_simple;
  j["ratio_gain"] = r.ratio_gain;
  return j;
}

}  // namespace

nlohmann::ordered_json analyze(std::span<const TrustRecord> records, double t_init) {
  ordered_json report;
  report["t_init"] = t_init;
  report["n_records"] = records.size();

  ordered_json summaries = ordered_json::array();
  for (int c = 1; c <= kCases; ++c) {
    for (Phase phase : {Phase::kBefore, Phase::kAfter}) {
      const int cases[] = {c};
      if (levels_for(records, cases, phase).empty()) continue;
      const Summary s = summarize(records, c, phase);
      summaries.push_back({{"case_id", c},
                           {"phase", to_string(phase)},
                           {"n", s.n},
                           {"mean", s.mean},
                           {"median_level", s.median_level},
                           {"median_label", level_label(s.median_level)},
                           {"histogram", s.histogram.counts}});
    }
  }
  report["summaries"] = std::move(summaries);

  ordered_json before_after = ordered_json::array();
  for (int c = 1; c <= kCases; ++c) {
    before_after.push_back(test_entry(records, {c}, Phase::kBefore, {c}, Phase::kAfter));
  }
  report["before_vs_after"] = std::move(before_after);

  ordered_json comparisons;
  for (Phase phase : {Phase::kBefore, Phase::kAfter}) {
    comparisons[std::string(to_string(phase))] = {
        test_entry(records, {1}, phase, {2}, phase),
        test_entry(records, {3}, phase, {4}, phase),
        test_entry(records, {1, 2}, phase, {3, 4}, phase)};
  }
  report["case_comparisons"] = std::move(comparisons);

  ordered_json restoration = ordered_json::array();
  for (int c = 1; c <= kCases; ++c) restoration.push_back(restoration_entry(records, {c}, t_init));
  restoration.push_back(restoration_entry(records, {1, 2, 3, 4}, t_init));
  report["restoration"] = std::move(restoration);
  return report;
}

std::string curve_csv(const TrustHistogram& hist) {
  std::string out = "x,density\n";
  char buf[64];
  for (const CurvePoint& p : curve_samples(hist)) {
    std::snprintf(buf, sizeof buf, "%.2f,%.12f\n", p.x, p.density);
    out += buf;
  }
  return out;
}

}  // namespace h2r::trust
