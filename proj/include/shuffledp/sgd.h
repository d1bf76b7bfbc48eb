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
// Locally private SGD for convex empirical risk minimization. Clients report
// their clipped per-example gradient as a single unit-sphere direction under
// an epsilon-LDP sign mechanism; the server averages shuffled reports,
// rescales by a Gamma-ratio constant to undo the randomization bias, and
// runs projected gradient steps.
#ifndef SHUFFLEDP_SGD_H_
#define SHUFFLEDP_SGD_H_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "shuffledp/accounting.h"
#include "shuffledp/random.h"

namespace shuffledp {
namespace sgd {

struct SgdConfig {
  uint32_t d = 1;             // model dimension
  double clip_norm = 1.0;     // L
  double diameter = 1.0;      // l2 radius of the constraint ball
  double epsilon_le = 1.0;    // per-report local budget
  uint32_t epochs = 1;        // T
  uint32_t tau = 1;           // report fragments per respondent per step
  uint64_t seed = 0;
  // 0 means full batch, as in the reference algorithm. A positive value
  // subsamples per epoch; accounting still assumes the full-batch path.
  uint32_t batch_size = 0;
};

struct ModelState {
  std::vector<double> theta;
};

// A single client's randomized gradient report; always exactly unit norm.
struct GradientReport {
  std::vector<double> direction;
};

struct Example {
  std::vector<double> features;
  double label = 0.0;
};

// Loss families with analytic per-example gradients. Convex in theta.
class LossFunction {
 public:
  virtual ~LossFunction() = default;
  virtual double Loss(std::span<const double> theta,
                      const Example& example) const = 0;
  virtual std::vector<double> Gradient(std::span<const double> theta,
                                       const Example& example) const = 0;
};

// log(1 + exp(-y * <theta, x>)) with labels in {-1, +1}.
class LogisticLoss : public LossFunction {
 public:
  double Loss(std::span<const double> theta,
              const Example& example) const override;
  std::vector<double> Gradient(std::span<const double> theta,
                               const Example& example) const override;
};

// 0.5 * (<theta, x> - y)^2.
class LeastSquaresLoss : public LossFunction {
 public:
  double Loss(std::span<const double> theta,
              const Example& example) const override;
  std::vector<double> Gradient(std::span<const double> theta,
                               const Example& example) const override;
};

// g * min(1, L/||g||); the zero vector passes through.
std::vector<double> ClipGradient(std::span<const double> g, double clip_norm);

// theta unchanged inside the ball, else scaled back to norm `diameter`.
std::vector<double> ProjectBall(std::span<const double> theta,
                                double diameter);

// Constant c(d, eps, L) with c * E[client report] = clipped gradient:
//   c = L * sqrt(pi) * Gamma((d+1)/2) / Gamma(d/2) * (e^eps+1)/(e^eps-1).
// Grows like sqrt(d) at fixed eps and is strictly decreasing in eps.
double DebiasConstant(uint32_t d, double epsilon_le, double clip_norm);

// One client's report: scale the clipped gradient onto {+-L} along its own
// direction, pick a uniform unit vector v, and release v signed by the inner
// product, with the sign kept at probability e^eps/(1+e^eps). A zero
// gradient is mapped to a symmetric +-L direction so the expectation stays
// zero.
GradientReport LdpSgdClient(std::span<const double> gradient,
                            const SgdConfig& config, Rng& rng);

// tau independent client reports of the same clipped gradient.
std::vector<GradientReport> ReportFragmentBatch(std::span<const double> gradient,
                                                const SgdConfig& config,
                                                Rng& rng);

// Full LDP-SGD: for each of T epochs broadcasts theta, collects the
// respondents' shuffled reports, debiases their average, steps with
//   eta = (diameter * sqrt(n) / (L * sqrt(d))) * (e^eps - 1)/(e^eps + 1)
// and projects back onto the constraint ball.
ModelState LdpSgdServer(const std::vector<Example>& data,
                        const LossFunction& loss, const SgdConfig& config);

// The central guarantee of a server run, delegated to the accountant.
accounting::CentralGuarantee SgdCentralGuarantee(const SgdConfig& config,
                                                 uint64_t n, double delta);

}  // namespace sgd
}  // namespace shuffledp

#endif  // SHUFFLEDP_SGD_H_
