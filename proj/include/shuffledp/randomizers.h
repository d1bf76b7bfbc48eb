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
// Local randomizers executed by simulated respondents: binary randomized
// response, the attribute-fragmented one-hot randomizer, and report
// fragmenting with a permanent backstop. All are pure given an explicit Rng.
#ifndef SHUFFLEDP_RANDOMIZERS_H_
#define SHUFFLEDP_RANDOMIZERS_H_

#include <cstdint>
#include <vector>

#include "shuffledp/accounting.h"
#include "shuffledp/random.h"

namespace shuffledp {
namespace randomizers {

// A categorical value encoded as the index of the single set bit in a
// k-dimensional binary vector.
struct OneHotRecord {
  uint32_t index = 0;
  uint32_t k = 1;
};

// Where a report is sent: one of K independent shuffler instances, and a
// reporting channel within that instance.
struct Destination {
  uint32_t instance = 0;
  uint32_t channel = 0;

  bool operator==(const Destination&) const = default;
};

// One randomized bit about one attribute.
struct BitReport {
  uint32_t attribute = 0;
  uint8_t value = 0;
  Destination destination;
};

// One re-randomized copy of a backstopped bit. fragment_index is 1-based.
struct FragmentReport {
  uint32_t fragment_index = 1;
  BitReport inner;
};

OneHotRecord EncodeOneHot(uint32_t value, uint32_t k);
uint32_t DecodeOneHot(const OneHotRecord& record);

// Binary randomized response: keeps b with probability e^eps/(1+e^eps).
uint8_t RandomizeBit(uint8_t b, double epsilon, Rng& rng);

// Runs randomized response independently on each of the k attribute bits of
// the one-hot record and addresses attribute j to a distinct destination.
// With num_instances = 0 every attribute gets its own instance; otherwise
// attribute j maps to instance (j mod K), channel (j div K). The caller must
// configure K at least as large as the number of distinct destinations that
// should be independent.
std::vector<BitReport> AttFragKRappor(const OneHotRecord& record,
                                      double epsilon_local, Rng& rng,
                                      uint32_t num_instances = 0);

// Draws one hidden backstop randomization of the input bit at
// epsilon_backstop, then emits tau independent re-randomizations of the
// backstop bit at epsilon_fragment each, one per distinct destination. The
// backstop bit is drawn exactly once per invocation; callers simulating a
// respondent's lifetime must call this once per respondent per attribute.
std::vector<FragmentReport> ReportFrag(uint8_t bit, double epsilon_backstop,
                                       double epsilon_fragment, uint32_t tau,
                                       Rng& rng);

// Runs ReportFrag independently for each attribute of the record. Report
// (fragment i, attribute j) is addressed to instance i-1, channel j, so that
// with at least tau instances all of one respondent's same-attribute
// fragments land on distinct instances. Output is ordered attribute-major.
std::vector<FragmentReport> AttAndReportFrag(
    const OneHotRecord& record, const accounting::FragmentPlan& plan,
    Rng& rng);

// Maps a debiased randomized bit back to an unbiased estimate of the input:
// r -> ((e^eps + 1) r - 1)/(e^eps - 1).
double DebiasBit(double r, double epsilon);

}  // namespace randomizers
}  // namespace shuffledp

#endif  // SHUFFLEDP_RANDOMIZERS_H_
