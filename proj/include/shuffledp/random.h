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
#ifndef SHUFFLEDP_RANDOM_H_
#define SHUFFLEDP_RANDOM_H_

#include <cstdint>
#include <random>
#include <vector>

namespace shuffledp {

// Identifies one deterministic stream of randomness. Identical (seed,
// stream_id) pairs reproduce identical draws; distinct stream_ids under the
// same seed give independent-looking streams, so simulated respondents can be
// run in parallel with disjoint ids.
struct RandomStream {
  uint64_t seed = 0;
  uint64_t stream_id = 0;
};

// Derives a child stream, e.g. one per (row, trial) or per respondent.
RandomStream Substream(const RandomStream& base, uint64_t tag);

class Rng {
 public:
  explicit Rng(const RandomStream& stream);

  uint64_t NextU64();

  // Uniform double in [0, 1).
  double UniformUnit();

  bool Bernoulli(double p);

  // Uniform integer in [0, bound). bound must be positive.
  uint64_t UniformInt(uint64_t bound);

  // Standard normal via Box-Muller; consumes two uniforms per pair of draws.
  double Gaussian();

  // Zero-mean Laplace with the given scale, sampled by inverse CDF so that
  // results are reproducible under seeding.
  double Laplace(double scale);

  // Binomial(n, p). Delegates to the standard library sampler, which is
  // deterministic given the engine state within a single build.
  int64_t Binomial(int64_t n, double p);

  // Uniform point on the unit sphere in R^d: normalized iid Gaussians.
  std::vector<double> UnitSphere(int d);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  bool have_cached_gaussian_ = false;
  double cached_gaussian_ = 0.0;
};

}  // namespace shuffledp

#endif  // SHUFFLEDP_RANDOM_H_
