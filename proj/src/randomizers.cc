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
#include "shuffledp/randomizers.h"

#include <cmath>
#include <stdexcept>

#include "shuffledp/errors.h"

namespace shuffledp {
namespace randomizers {

OneHotRecord EncodeOneHot(uint32_t value, uint32_t k) {
  if (k == 0) throw std::invalid_argument("EncodeOneHot: k must be > 0");
  if (value >= k) {
    throw std::invalid_argument("EncodeOneHot: value out of range [0, k)");
  }
  return OneHotRecord{value, k};
}

uint32_t DecodeOneHot(const OneHotRecord& record) {
  if (record.index >= record.k) {
    throw std::invalid_argument("DecodeOneHot: malformed record");
  }
  return record.index;
}

uint8_t RandomizeBit(uint8_t b, double epsilon, Rng& rng) {
  double flip = accounting::FlipProbability(epsilon);
  if (rng.Bernoulli(flip)) return static_cast<uint8_t>(1 - (b & 1));
  return static_cast<uint8_t>(b & 1);
}

std::vector<BitReport> AttFragKRappor(const OneHotRecord& record,
                                      double epsilon_local, Rng& rng,
                                      uint32_t num_instances) {
  if (record.index >= record.k) {
    throw std::invalid_argument("AttFragKRappor: malformed record");
  }
  uint32_t instances = num_instances == 0 ? record.k : num_instances;
  std::vector<BitReport> reports;
  reports.reserve(record.k);
  for (uint32_t j = 0; j < record.k; ++j) {
    uint8_t bit = j == record.index ? 1 : 0;
    BitReport r;
    r.attribute = j;
    r.value = RandomizeBit(bit, epsilon_local, rng);
    r.destination = Destination{j % instances, j / instances};
    reports.push_back(r);
  }
  return reports;
}

std::vector<FragmentReport> ReportFrag(uint8_t bit, double epsilon_backstop,
                                       double epsilon_fragment, uint32_t tau,
                                       Rng& rng) {
  if (tau < 1) throw std::invalid_argument("ReportFrag: tau must be >= 1");
  uint8_t backstop = RandomizeBit(bit, epsilon_backstop, rng);
  std::vector<FragmentReport> fragments;
  fragments.reserve(tau);
  for (uint32_t i = 1; i <= tau; ++i) {
    FragmentReport f;
    f.fragment_index = i;
    f.inner.attribute = 0;
    f.inner.value = RandomizeBit(backstop, epsilon_fragment, rng);
    f.inner.destination = Destination{i - 1, 0};
    fragments.push_back(f);
  }
  return fragments;
}

std::vector<FragmentReport> AttAndReportFrag(
    const OneHotRecord& record, const accounting::FragmentPlan& plan,
    Rng& rng) {
  if (record.index >= record.k) {
    throw std::invalid_argument("AttAndReportFrag: malformed record");
  }
  std::vector<FragmentReport> all;
  all.reserve(static_cast<size_t>(record.k) * plan.tau);
  for (uint32_t j = 0; j < record.k; ++j) {
    uint8_t bit = j == record.index ? 1 : 0;
    std::vector<FragmentReport> frags = ReportFrag(
        bit, plan.epsilon_backstop, plan.epsilon_fragment, plan.tau, rng);
    for (FragmentReport& f : frags) {
      f.inner.attribute = j;
      f.inner.destination = Destination{f.fragment_index - 1, j};
      all.push_back(f);
    }
  }
  return all;
}

double DebiasBit(double r, double epsilon) {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("DebiasBit: epsilon must be > 0");
  }
  return ((std::exp(epsilon) + 1.0) * r - 1.0) / std::expm1(epsilon);
}

}  // namespace randomizers
}  // namespace shuffledp
