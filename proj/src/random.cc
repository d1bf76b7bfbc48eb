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
#include "shuffledp/random.h"

#include <cmath>
#include <stdexcept>

namespace shuffledp {
namespace {

// SplitMix64; used only to expand (seed, stream_id) into engine state.
uint64_t SplitMix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

RandomStream Substream(const RandomStream& base, uint64_t tag) {
  uint64_t s = base.stream_id ^ 0x6a09e667f3bcc909ULL;
  uint64_t mixed = SplitMix64(s) ^ tag;
  uint64_t m2 = SplitMix64(mixed);
  return RandomStream{base.seed, m2};
}

Rng::Rng(const RandomStream& stream) {
  uint64_t s = stream.seed;
  uint64_t a = SplitMix64(s);
  s ^= stream.stream_id * 0xff51afd7ed558ccdULL;
  uint64_t b = SplitMix64(s);
  uint64_t c = SplitMix64(s);
  uint64_t d = SplitMix64(s);
  std::seed_seq seq{static_cast<uint32_t>(a), static_cast<uint32_t>(a >> 32),
                    static_cast<uint32_t>(b), static_cast<uint32_t>(b >> 32),
                    static_cast<uint32_t>(c), static_cast<uint32_t>(c >> 32),
                    static_cast<uint32_t>(d), static_cast<uint32_t>(d >> 32)};
  engine_.seed(seq);
}

uint64_t Rng::NextU64() { return engine_(); }

double Rng::UniformUnit() {
  // 53 random mantissa bits.
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

bool Rng::Bernoulli(double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return UniformUnit() < p;
}

uint64_t Rng::UniformInt(uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("UniformInt: bound must be > 0");
  // Rejection sampling to avoid modulo bias.
  uint64_t threshold = -bound % bound;
  for (;;) {
    uint64_t r = engine_();
    if (r >= threshold) return r % bound;
  }
}

double Rng::Gaussian() {
  if (have_cached_gaussian_) {
    have_cached_gaussian_ = false;
    return cached_gaussian_;
  }
  // Box-Muller on uniforms from (0,1].
  double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * M_PI * u2;
  cached_gaussian_ = r * std::sin(theta);
  have_cached_gaussian_ = true;
  return r * std::cos(theta);
}

double Rng::Laplace(double scale) {
  if (scale <= 0.0) throw std::invalid_argument("Laplace: scale must be > 0");
  double u = UniformUnit() - 0.5;
  double sign = u < 0.0 ? -1.0 : 1.0;
  return -scale * sign * std::log1p(-2.0 * std::fabs(u));
}

int64_t Rng::Binomial(int64_t n, double p) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  std::binomial_distribution<int64_t> dist(n, p);
  return dist(engine_);
}

std::vector<double> Rng::UnitSphere(int d) {
  if (d < 1) throw std::invalid_argument("UnitSphere: d must be >= 1");
  std::vector<double> v(d);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (int i = 0; i < d; ++i) {
      v[i] = Gaussian();
      norm2 += v[i] * v[i];
    }
  } while (norm2 == 0.0);
  double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
  return v;
}

}  // namespace shuffledp
