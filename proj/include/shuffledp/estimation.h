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
//
// Debiased histogram estimation from summed bit reports, and the error
// metrics used to evaluate reconstructions.
#ifndef SHUFFLEDP_ESTIMATION_H_
#define SHUFFLEDP_ESTIMATION_H_

#include <cstdint>
#include <span>
#include <vector>

#include "shuffledp/accounting.h"

namespace shuffledp {
namespace estimation {

// Estimated frequency vector. Entries are unbiased, not clamped: they may be
// negative or exceed one. Clamping, when wanted, is a separate post-process.
struct HistogramEstimate {
  std::vector<double> h_hat;
  uint64_t n = 0;
  double epsilon_used = 0.0;
};

struct ErrorReport {
  double linf = 0.0;
  double rmse = 0.0;
  double topk_recall = 1.0;
  // Target failure probability for accuracy checks that reference linf.
  double beta = 0.05;
};

// Debiases per-attribute sums of randomized bits:
//   h_j = (1/n) * (e^eps + 1)/(e^eps - 1) * S_j - 1/(e^eps - 1).
// Requires eps > 0 (the debias factor degenerates at 0), n > 0 and
// S_j <= n.
HistogramEstimate EstimateHistogram(std::span<const uint64_t> sums, uint64_t n,
                                    double epsilon);

// Two-stage debiasing for report fragments: each of the tau fragment rows is
// debiased at the fragment budget and averaged, then the average is debiased
// once more at the backstop budget. Unbiased for the true frequencies.
HistogramEstimate EstimateFromFragments(
    const std::vector<std::vector<uint64_t>>& fragment_sums, uint64_t n,
    const accounting::FragmentPlan& plan);

// linf / rmse / top-K recall of an estimate against the truth, computed in
// whatever units the two vectors share.
ErrorReport ErrorMetrics(std::span<const double> estimate,
                         std::span<const double> truth, uint32_t topk);

// Indices of the k largest entries, ties broken toward lower index.
std::vector<uint32_t> TopKIndices(std::span<const double> values, uint32_t k);

}  // namespace estimation
}  // namespace shuffledp

#endif  // SHUFFLEDP_ESTIMATION_H_
