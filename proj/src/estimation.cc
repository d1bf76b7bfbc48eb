// Copyright 2025 The shuffledp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "shuffledp/estimation.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "shuffledp/errors.h"

namespace shuffledp {
namespace estimation {
namespace {

void CheckEpsilon(double epsilon, const char* op) {
  if (epsilon == 0.0) {
    throw std::invalid_argument(
        std::string(op) + ": epsilon = 0 degenerates the debias factor");
  }
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument(std::string(op) + ": epsilon must be > 0");
  }
}

}  // namespace

HistogramEstimate EstimateHistogram(std::span<const uint64_t> sums, uint64_t n,
                                    double epsilon) {
  CheckEpsilon(epsilon, "EstimateHistogram");
  if (n == 0) throw std::invalid_argument("EstimateHistogram: n must be > 0");
  if (sums.empty()) {
    throw FormatError("EstimateHistogram: empty sums vector");
  }
  double scale = (std::exp(epsilon) + 1.0) / std::expm1(epsilon);
  double offset = 1.0 / std::expm1(epsilon);
  double inv_n = 1.0 / static_cast<double>(n);
  HistogramEstimate est;
  est.n = n;
  est.epsilon_used = epsilon;
  est.h_hat.reserve(sums.size());
  for (uint64_t s : sums) {
    if (s > n) {
      throw FormatError("EstimateHistogram: sum exceeds respondent count");
    }
    est.h_hat.push_back(inv_n * scale * static_cast<double>(s) - offset);
  }
  return est;
}

HistogramEstimate EstimateFromFragments(
    const std::vector<std::vector<uint64_t>>& fragment_sums, uint64_t n,
    const accounting::FragmentPlan& plan) {
  if (n == 0) {
    throw std::invalid_argument("EstimateFromFragments: n must be > 0");
  }
  if (fragment_sums.size() != plan.tau) {
    throw FormatError("EstimateFromFragments: expected tau fragment rows");
  }
  CheckEpsilon(plan.epsilon_fragment, "EstimateFromFragments");
  CheckEpsilon(plan.epsilon_backstop, "EstimateFromFragments");
  size_t k = fragment_sums.front().size();
  std::vector<double> mean_backstop(k, 0.0);
  for (const auto& row : fragment_sums) {
    if (row.size() != k) {
      throw FormatError("EstimateFromFragments: ragged fragment matrix");
    }
    HistogramEstimate per_row = EstimateHistogram(row, n, plan.epsilon_fragment);
    for (size_t j = 0; j < k; ++j) mean_backstop[j] += per_row.h_hat[j];
  }
  double inv_tau = 1.0 / static_cast<double>(plan.tau);
  double scale = (std::exp(plan.epsilon_backstop) + 1.0) /
                 std::expm1(plan.epsilon_backstop);
  double offset = 1.0 / std::expm1(plan.epsilon_backstop);
  HistogramEstimate est;
  est.n = n;
  est.epsilon_used = accounting::ReportFragLocal(plan).epsilon;
  est.h_hat.resize(k);
  for (size_t j = 0; j < k; ++j) {
    est.h_hat[j] = scale * (mean_backstop[j] * inv_tau) - offset;
  }
  return est;
}

std::vector<uint32_t> TopKIndices(std::span<const double> values, uint32_t k) {
  std::vector<uint32_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  uint32_t kk = std::min<uint32_t>(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + kk, idx.end(),
                    [&](uint32_t a, uint32_t b) {
                      if (values[a] != values[b]) return values[a] > values[b];
                      return a < b;
                    });
  idx.resize(kk);
  return idx;
}

ErrorReport ErrorMetrics(std::span<const double> estimate,
                         std::span<const double> truth, uint32_t topk) {
  if (estimate.size() != truth.size()) {
    throw FormatError("ErrorMetrics: estimate and truth lengths differ");
  }
  if (estimate.empty()) {
    throw FormatError("ErrorMetrics: empty vectors");
  }
  ErrorReport report;
  double sum_sq = 0.0;
  for (size_t j = 0; j < estimate.size(); ++j) {
    double d = std::fabs(estimate[j] - truth[j]);
    report.linf = std::max(report.linf, d);
    sum_sq += d * d;
  }
  report.rmse = std::sqrt(sum_sq / static_cast<double>(estimate.size()));
  if (topk > 0) {
    std::vector<uint32_t> top_est = TopKIndices(estimate, topk);
    std::vector<uint32_t> top_truth = TopKIndices(truth, topk);
    std::sort(top_est.begin(), top_est.end());
    std::sort(top_truth.begin(), top_truth.end());
    std::vector<uint32_t> common;
    std::set_intersection(top_est.begin(), top_est.end(), top_truth.begin(),
                          top_truth.end(), std::back_inserter(common));
    report.topk_recall =
        static_cast<double>(common.size()) / static_cast<double>(topk);
  }
  return report;
}

}  // namespace estimation
}  // namespace shuffledp
