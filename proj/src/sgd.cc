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
#include "shuffledp/sgd.h"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "shuffledp/errors.h"
#include "shuffledp/shuffler.h"

namespace shuffledp {
namespace sgd {
namespace {

double Norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double Dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void CheckConfig(const SgdConfig& config) {
  if (config.d < 1) throw std::invalid_argument("SgdConfig: d must be >= 1");
  if (!(config.clip_norm > 0.0)) {
    throw std::invalid_argument("SgdConfig: clip_norm must be > 0");
  }
  if (!(config.diameter > 0.0)) {
    throw std::invalid_argument("SgdConfig: diameter must be > 0");
  }
  if (!(config.epsilon_le >= 0.0)) {
    throw std::invalid_argument("SgdConfig: epsilon_le must be >= 0");
  }
  if (config.tau < 1) throw std::invalid_argument("SgdConfig: tau must be >= 1");
  if (config.epochs < 1) {
    throw std::invalid_argument("SgdConfig: epochs must be >= 1");
  }
}

shuffler::Payload SerializeDirection(std::span<const double> v) {
  shuffler::Payload p(v.size() * sizeof(double), '\0');
  std::memcpy(p.data(), v.data(), p.size());
  return p;
}

std::vector<double> DeserializeDirection(const shuffler::Payload& p,
                                         uint32_t d) {
  if (p.size() != d * sizeof(double)) {
    throw FormatError("LdpSgdServer: report payload has wrong arity");
  }
  std::vector<double> v(d);
  std::memcpy(v.data(), p.data(), p.size());
  return v;
}

}  // namespace

double LogisticLoss::Loss(std::span<const double> theta,
                          const Example& example) const {
  double margin = example.label * Dot(theta, example.features);
  // log(1 + e^-m), stable on both sides.
  if (margin > 0) return std::log1p(std::exp(-margin));
  return -margin + std::log1p(std::exp(margin));
}

std::vector<double> LogisticLoss::Gradient(std::span<const double> theta,
                                           const Example& example) const {
  double margin = example.label * Dot(theta, example.features);
  double sigma = 1.0 / (1.0 + std::exp(margin));
  std::vector<double> g(example.features.size());
  for (size_t i = 0; i < g.size(); ++i) {
    g[i] = -example.label * sigma * example.features[i];
  }
  return g;
}

double LeastSquaresLoss::Loss(std::span<const double> theta,
                              const Example& example) const {
  double r = Dot(theta, example.features) - example.label;
  return 0.5 * r * r;
}

std::vector<double> LeastSquaresLoss::Gradient(std::span<const double> theta,
                                               const Example& example) const {
  double r = Dot(theta, example.features) - example.label;
  std::vector<double> g(example.features.size());
  for (size_t i = 0; i < g.size(); ++i) g[i] = r * example.features[i];
  return g;
}

std::vector<double> ClipGradient(std::span<const double> g, double clip_norm) {
  if (!(clip_norm > 0.0)) {
    throw std::invalid_argument("ClipGradient: clip_norm must be > 0");
  }
  std::vector<double> out(g.begin(), g.end());
  double norm = Norm2(g);
  if (norm > clip_norm) {
    double s = clip_norm / norm;
    for (double& x : out) x *= s;
  }
  return out;
}

std::vector<double> ProjectBall(std::span<const double> theta,
                                double diameter) {
  if (!(diameter > 0.0)) {
    throw std::invalid_argument("ProjectBall: diameter must be > 0");
  }
  std::vector<double> out(theta.begin(), theta.end());
  double norm = Norm2(theta);
  if (norm > diameter) {
    double s = diameter / norm;
    for (double& x : out) x *= s;
  }
  return out;
}

double DebiasConstant(uint32_t d, double epsilon_le, double clip_norm) {
  if (d < 1) throw std::invalid_argument("DebiasConstant: d must be >= 1");
  if (!(clip_norm > 0.0)) {
    throw std::invalid_argument("DebiasConstant: clip_norm must be > 0");
  }
  if (!(epsilon_le > 0.0)) {
    throw std::invalid_argument(
        "DebiasConstant: epsilon_le = 0 degenerates the sign debias");
  }
  double dd = static_cast<double>(d);
  double gamma_ratio =
      std::exp(std::lgamma((dd + 1.0) / 2.0) - std::lgamma(dd / 2.0));
  double sign_debias = (std::exp(epsilon_le) + 1.0) / std::expm1(epsilon_le);
  return clip_norm * std::sqrt(M_PI) * gamma_ratio * sign_debias;
}

GradientReport LdpSgdClient(std::span<const double> gradient,
                            const SgdConfig& config, Rng& rng) {
  CheckConfig(config);
  if (gradient.size() != config.d) {
    throw std::invalid_argument("LdpSgdClient: gradient has wrong dimension");
  }
  std::vector<double> x = ClipGradient(gradient, config.clip_norm);
  double norm = Norm2(x);

  // z = +-L * x/||x||, biased toward +, so that E[z] = x. A zero gradient has
  // no direction; a symmetric +-L draw along a random axis keeps E[z] = 0.
  std::vector<double> direction(config.d, 0.0);
  if (norm > 0.0) {
    for (uint32_t i = 0; i < config.d; ++i) direction[i] = x[i] / norm;
  } else {
    direction = rng.UnitSphere(static_cast<int>(config.d));
  }
  double p_plus = 0.5 + norm / (2.0 * config.clip_norm);
  double z_sign = rng.Bernoulli(p_plus) ? 1.0 : -1.0;

  std::vector<double> v = rng.UnitSphere(static_cast<int>(config.d));
  double inner = z_sign * Dot(direction, v);
  double sign = inner >= 0.0 ? 1.0 : -1.0;
  double keep_prob = 1.0 - accounting::FlipProbability(config.epsilon_le);
  if (!rng.Bernoulli(keep_prob)) sign = -sign;

  GradientReport report;
  report.direction.resize(config.d);
  for (uint32_t i = 0; i < config.d; ++i) report.direction[i] = sign * v[i];
  return report;
}

std::vector<GradientReport> ReportFragmentBatch(std::span<const double> gradient,
                                                const SgdConfig& config,
                                                Rng& rng) {
  std::vector<GradientReport> reports;
  reports.reserve(config.tau);
  for (uint32_t i = 0; i < config.tau; ++i) {
    reports.push_back(LdpSgdClient(gradient, config, rng));
  }
  return reports;
}

ModelState LdpSgdServer(const std::vector<Example>& data,
                        const LossFunction& loss, const SgdConfig& config) {
  CheckConfig(config);
  if (data.empty()) {
    throw std::invalid_argument("LdpSgdServer: empty dataset");
  }
  uint64_t n = data.size();
  double debias = config.epsilon_le > 0.0
                      ? DebiasConstant(config.d, config.epsilon_le,
                                       config.clip_norm)
                      : 0.0;
  double sign_shrink = std::tanh(config.epsilon_le / 2.0);  // (e^e-1)/(e^e+1)
  // Base step size per the reference schedule; decayed by 1/sqrt(t) as the
  // convergence analysis it instantiates requires.
  double eta_base = config.diameter * std::sqrt(static_cast<double>(n)) /
                    (config.clip_norm * std::sqrt(static_cast<double>(config.d))) *
                    sign_shrink;

  ModelState state;
  state.theta.assign(config.d, 0.0);
  RandomStream base{config.seed, 0};

  for (uint32_t t = 0; t < config.epochs; ++t) {
    // Pick the epoch's participants.
    std::vector<uint64_t> batch;
    if (config.batch_size == 0 || config.batch_size >= n) {
      batch.resize(n);
      for (uint64_t i = 0; i < n; ++i) batch[i] = i;
    } else {
      Rng sampler(Substream(base, 0x5a5a0000ull + t));
      batch.reserve(config.batch_size);
      for (uint32_t i = 0; i < config.batch_size; ++i) {
        batch.push_back(sampler.UniformInt(n));
      }
    }

    // Clients randomize; one shuffler instance per epoch collects.
    shuffler::ShufflerInstance instance(t);
    instance.DeclareChannel(0);
    for (uint64_t idx : batch) {
      Rng client_rng(Substream(base, (uint64_t{t} << 32) ^ idx));
      std::vector<double> g = loss.Gradient(state.theta, data[idx]);
      for (const GradientReport& r :
           ReportFragmentBatch(g, config, client_rng)) {
        instance.Ingest(0, SerializeDirection(r.direction), idx);
      }
    }
    Rng shuffle_rng(Substream(base, 0x7ea10000ull + t));
    std::vector<shuffler::Payload> released =
        instance.ReleaseShuffled(0, shuffle_rng);

    std::vector<double> mean(config.d, 0.0);
    for (const shuffler::Payload& p : released) {
      std::vector<double> dir = DeserializeDirection(p, config.d);
      for (uint32_t i = 0; i < config.d; ++i) mean[i] += dir[i];
    }
    double inv = 1.0 / static_cast<double>(released.size());
    for (uint32_t i = 0; i < config.d; ++i) mean[i] *= inv;

    double eta = eta_base / std::sqrt(static_cast<double>(t) + 1.0);
    std::vector<double> next(config.d);
    for (uint32_t i = 0; i < config.d; ++i) {
      next[i] = state.theta[i] - eta * debias * mean[i];
    }
    state.theta = ProjectBall(next, config.diameter);
  }
  return state;
}

accounting::CentralGuarantee SgdCentralGuarantee(const SgdConfig& config,
                                                 uint64_t n, double delta) {
  return accounting::LdpSgdCentral(accounting::SgdPrivacyQuery{
      config.epsilon_le, config.epochs, n, delta});
}

}  // namespace sgd
}  // namespace shuffledp
