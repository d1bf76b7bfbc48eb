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
#include "shuffledp/accounting.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "shuffledp/errors.h"

namespace shuffledp {
namespace accounting {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log(e^x + e^y) without overflow.
double LogAddExp(double x, double y) {
  double hi = std::max(x, y);
  double lo = std::min(x, y);
  return hi + std::log1p(std::exp(lo - hi));
}

double NormalCdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

void CheckEpsilonDelta(double epsilon, double delta, const char* op) {
  if (!(epsilon >= 0.0) || std::isnan(epsilon)) {
    throw std::invalid_argument(std::string(op) + ": epsilon must be >= 0");
  }
  if (!(delta >= 0.0) || !(delta < 1.0)) {
    throw std::invalid_argument(std::string(op) +
                                ": delta must be in [0, 1)");
  }
}

// The exact shuffled-sum bound at blanket size lambda:
// sqrt(32*log(4/delta)/lambda') * (1 - lambda'/n),
// lambda' = lambda - sqrt(2*lambda*log(2/delta)).
double ExactBoundAtLambda(double lambda, double n, double delta) {
  double lambda_prime = lambda - std::sqrt(2.0 * lambda * std::log(2.0 / delta));
  return std::sqrt(32.0 * std::log(4.0 / delta) / lambda_prime) *
         (1.0 - lambda_prime / n);
}

double BinaryLambda(double epsilon_local, double n) {
  // 2n/(1+e^eps), computed in the e^-eps form so large budgets do not
  // overflow.
  double t = std::exp(-epsilon_local);
  return 2.0 * n * t / (1.0 + t);
}

}  // namespace

double FlipProbability(double epsilon) {
  if (!(epsilon >= 0.0)) {
    throw std::invalid_argument("FlipProbability: epsilon must be >= 0");
  }
  double t = std::exp(-epsilon);
  return t / (1.0 + t);
}

double FlipProbabilityInverse(double p) {
  if (!(p > 0.0) || !(p <= 0.5)) {
    throw std::invalid_argument(
        "FlipProbabilityInverse: p must be in (0, 0.5]");
  }
  return std::log1p((1.0 - 2.0 * p) / p);
}

CentralGuarantee AmplifyBinaryExact(const AmplificationQuery& q) {
  CheckEpsilonDelta(q.epsilon_local, q.delta, "AmplifyBinaryExact");
  if (q.n == 0) {
    throw std::invalid_argument("AmplifyBinaryExact: n must be > 0");
  }
  if (q.delta <= 0.0) {
    throw std::invalid_argument("AmplifyBinaryExact: delta must be > 0");
  }
  double n = static_cast<double>(q.n);
  double lambda = BinaryLambda(q.epsilon_local, n);
  double lambda_floor = 14.0 * std::log(4.0 / q.delta);
  if (lambda < lambda_floor) {
    throw PreconditionError(
        "AmplifyBinaryExact: violated 14*log(4/delta) <= lambda, lambda = " +
        std::to_string(lambda) + ", floor = " + std::to_string(lambda_floor));
  }
  if (lambda > n) {
    throw PreconditionError("AmplifyBinaryExact: violated lambda <= n");
  }
  return CentralGuarantee{ExactBoundAtLambda(lambda, n, q.delta), q.delta};
}

CentralGuarantee AmplifyBinarySimple(const AmplificationQuery& q) {
  CheckEpsilonDelta(q.epsilon_local, q.delta, "AmplifyBinarySimple");
  if (q.n == 0) {
    throw std::invalid_argument("AmplifyBinarySimple: n must be > 0");
  }
  if (q.delta <= 0.0) {
    throw std::invalid_argument("AmplifyBinarySimple: delta must be > 0");
  }
  double n = static_cast<double>(q.n);
  double log_n = std::log(n);
  if (q.epsilon_local < 1.0) {
    throw PreconditionError("AmplifyBinarySimple: violated 1 <= epsilon");
  }
  double window_hi = log_n - std::log(14.0 * std::log(4.0 / q.delta));
  if (q.epsilon_local > window_hi) {
    throw PreconditionError(
        "AmplifyBinarySimple: violated epsilon <= log(n) - "
        "log(14*log(4/delta)), window top = " +
        std::to_string(window_hi));
  }
  if (std::log(q.delta) < -log_n * log_n) {
    throw PreconditionError("AmplifyBinarySimple: violated delta >= n^(-log n)");
  }
  double eps_c =
      std::sqrt(64.0 * std::exp(q.epsilon_local) * std::log(4.0 / q.delta) / n);
  return CentralGuarantee{eps_c, q.delta};
}

CentralGuarantee AmplifyGeneric(const AmplificationQuery& q) {
  CheckEpsilonDelta(q.epsilon_local, q.delta, "AmplifyGeneric");
  if (q.n == 0) {
    throw std::invalid_argument("AmplifyGeneric: n must be > 0");
  }
  if (q.delta <= 0.0) {
    throw std::invalid_argument("AmplifyGeneric: delta must be > 0");
  }
  double n = static_cast<double>(q.n);
  double window_hi = std::log(n / std::log(1.0 / q.delta)) / 2.0;
  if (q.epsilon_local > window_hi) {
    throw PreconditionError(
        "AmplifyGeneric: violated epsilon <= log(n/log(1/delta))/2, "
        "window top = " +
        std::to_string(window_hi));
  }
  double amplified = kGenericAmplificationConstant *
                     std::expm1(q.epsilon_local) *
                     std::sqrt(std::log(1.0 / q.delta) / n);
  return CentralGuarantee{std::min(q.epsilon_local, amplified), q.delta};
}

double ComposeSequential(double epsilon1, double epsilon2) {
  if (!(epsilon1 >= 0.0) || !(epsilon2 >= 0.0)) {
    throw std::invalid_argument("ComposeSequential: budgets must be >= 0");
  }
  // ln((e^(e1+e2)+1) / (e^e1+e^e2)), evaluated in log space.
  return LogAddExp(epsilon1 + epsilon2, 0.0) - LogAddExp(epsilon1, epsilon2);
}

namespace {
void ValidatePlan(const FragmentPlan& plan) {
  if (plan.tau < 1) {
    throw std::invalid_argument("FragmentPlan: tau must be >= 1");
  }
  if (plan.exposed < 1 || plan.exposed > plan.tau) {
    throw std::invalid_argument("FragmentPlan: need 1 <= exposed <= tau");
  }
  if (!(plan.epsilon_backstop >= 0.0) || !(plan.epsilon_fragment >= 0.0)) {
    throw std::invalid_argument("FragmentPlan: budgets must be >= 0");
  }
}
}  // namespace

LocalBudget ReportFragLocal(const FragmentPlan& plan) {
  ValidatePlan(plan);
  double eps = ComposeSequential(
      plan.epsilon_backstop,
      static_cast<double>(plan.exposed) * plan.epsilon_fragment);
  return LocalBudget{eps, 0.0, PrivacyModel::kRemoval};
}

CentralGuarantee ReportFragCentral(const FragmentPlan& plan, uint64_t n,
                                   double delta) {
  ValidatePlan(plan);
  if (n == 0) throw std::invalid_argument("ReportFragCentral: n must be > 0");
  if (!(plan.epsilon_fragment > 1.0)) {
    throw PreconditionError("ReportFragCentral: violated epsilon_fragment > 1");
  }
  if (!(delta > 0.0) || !(delta < 0.5)) {
    throw PreconditionError("ReportFragCentral: violated delta < 1/2");
  }
  double nn = static_cast<double>(n);
  double tau_eps = static_cast<double>(plan.tau) * plan.epsilon_fragment;
  double log_term = std::log(tau_eps / delta);
  double fragment_branch = std::sqrt(8.0 * tau_eps * log_term * log_term / nn);
  double backstop_branch = std::sqrt(
      64.0 * std::exp(plan.epsilon_backstop) * std::log(4.0 / delta) / nn);
  return CentralGuarantee{std::min(fragment_branch, backstop_branch), delta};
}

CentralGuarantee AdvancedComposition(const CompositionQuery& q) {
  if (q.k < 1) {
    throw std::invalid_argument("AdvancedComposition: k must be >= 1");
  }
  if (!(q.delta_slack > 0.0)) {
    throw std::invalid_argument("AdvancedComposition: delta_slack must be > 0");
  }
  CheckEpsilonDelta(q.epsilon_step, q.delta_step, "AdvancedComposition");
  double k = static_cast<double>(q.k);
  double total_delta = q.delta_slack + k * q.delta_step;
  if (q.epsilon_step == 0.0) {
    // Composing no-ops leaks nothing.
    return CentralGuarantee{0.0, total_delta};
  }
  double log_arg = std::sqrt(k * M_PI / 2.0) * q.epsilon_step / q.delta_slack;
  if (!(log_arg > 1.0)) {
    throw PreconditionError(
        "AdvancedComposition: violated sqrt(k*pi/2)*eps/delta' > 1; use basic "
        "composition (k*eps, k*delta) instead");
  }
  double eps = k * q.epsilon_step * q.epsilon_step / 2.0 +
               std::sqrt(k) * q.epsilon_step *
                   std::sqrt(2.0 * std::log(log_arg));
  return CentralGuarantee{eps, total_delta};
}

CentralGuarantee LdpSgdCentral(const SgdPrivacyQuery& q) {
  if (q.epochs < 1) {
    throw std::invalid_argument("LdpSgdCentral: epochs must be >= 1");
  }
  if (q.n == 0) throw std::invalid_argument("LdpSgdCentral: n must be > 0");
  if (!(q.delta > 0.0) || !(q.delta < 1.0)) {
    throw std::invalid_argument("LdpSgdCentral: delta must be in (0, 1)");
  }
  double log_n = std::log(static_cast<double>(q.n));
  if (!(q.epsilon_per_epoch <= log_n / 4.0)) {
    throw PreconditionError(
        "LdpSgdCentral: violated epsilon_per_epoch <= log(n)/4");
  }
  double t = static_cast<double>(q.epochs);
  double delta_epoch = q.delta / (2.0 * t);
  double delta_slack = q.delta / 2.0;
  CentralGuarantee per_epoch = AmplifyGeneric(
      AmplificationQuery{q.epsilon_per_epoch, q.n, delta_epoch});
  if (q.epochs == 1) {
    // A single epoch needs no composition step.
    return CentralGuarantee{per_epoch.epsilon, delta_epoch + delta_slack};
  }
  return AdvancedComposition(CompositionQuery{
      per_epoch.epsilon, delta_epoch, q.epochs, delta_slack});
}

LocalBudget ConvertModel(const LocalBudget& budget, PrivacyModel target) {
  if (budget.model == target) return budget;
  LocalBudget out = budget;
  out.model = target;
  if (target == PrivacyModel::kReplacement) {
    out.epsilon = 2.0 * budget.epsilon;
  }
  // Replacement -> Removal: a replacement budget is already a valid removal
  // bound, so epsilon is kept as-is.
  return out;
}

double MiLowerBound(double tpr, double fpr) {
  if (!(tpr >= 0.0) || !(tpr <= 1.0) || !(fpr >= 0.0) || !(fpr <= 1.0)) {
    throw std::invalid_argument("MiLowerBound: rates must be in [0, 1]");
  }
  double advantage = tpr - fpr;
  if (advantage <= 0.0) return 0.0;
  if (advantage >= 1.0) {
    throw std::domain_error(
        "MiLowerBound: tpr - fpr = 1 implies unbounded privacy loss");
  }
  return -std::log1p(-advantage);
}

double GaussianSigma(double epsilon, double delta, double sensitivity) {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("GaussianSigma: epsilon must be > 0");
  }
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw std::invalid_argument("GaussianSigma: delta must be in (0, 1)");
  }
  if (!(sensitivity > 0.0)) {
    throw std::invalid_argument("GaussianSigma: sensitivity must be > 0");
  }
  auto analytic_delta = [&](double sigma) {
    double a = sensitivity / (2.0 * sigma);
    double b = epsilon * sigma / sensitivity;
    return NormalCdf(a - b) - std::exp(epsilon) * NormalCdf(-a - b);
  };
  // Binary search over the documented grid {k * 1e-4 : k >= 1}. The analytic
  // delta is nonincreasing in sigma.
  constexpr double kGrid = 1e-4;
  int64_t lo = 1, hi = 1;
  while (analytic_delta(static_cast<double>(hi) * kGrid) > delta) {
    hi *= 2;
    if (hi > (int64_t{1} << 46)) {
      throw std::domain_error("GaussianSigma: no grid sigma satisfies delta");
    }
  }
  while (lo < hi) {
    int64_t mid = lo + (hi - lo) / 2;
    if (analytic_delta(static_cast<double>(mid) * kGrid) <= delta) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return static_cast<double>(lo) * kGrid;
}

CentralGuarantee Amplify(const AmplificationQuery& q, AmplificationMode mode) {
  switch (mode) {
    case AmplificationMode::kBinaryExact:
      return AmplifyBinaryExact(q);
    case AmplificationMode::kBinarySimple:
      return AmplifyBinarySimple(q);
    case AmplificationMode::kGeneric:
      return AmplifyGeneric(q);
  }
  throw std::invalid_argument("Amplify: unknown mode");
}

LocalBudget SolveLocalForCentral(const CentralGuarantee& target, uint64_t n,
                                 AmplificationMode mode) {
  if (n == 0) {
    throw std::invalid_argument("SolveLocalForCentral: n must be > 0");
  }
  if (!(target.epsilon > 0.0)) {
    throw std::invalid_argument("SolveLocalForCentral: target must be > 0");
  }
  if (!(target.delta > 0.0) || !(target.delta < 1.0)) {
    throw std::invalid_argument(
        "SolveLocalForCentral: delta must be in (0, 1)");
  }
  double nn = static_cast<double>(n);
  double delta = target.delta;

  // Feasible local-budget window per mode.
  double eps_lo, eps_hi;
  switch (mode) {
    case AmplificationMode::kBinaryExact: {
      // lambda(eps) in [14*log(4/delta), n]; lambda decreases in eps.
      double lambda_floor = 14.0 * std::log(4.0 / delta);
      if (lambda_floor > nn) {
        throw InfeasibleError(
            "SolveLocalForCentral: n below 14*log(4/delta); no budget is "
            "admissible",
            0.0, 0.0);
      }
      eps_lo = 0.0;
      eps_hi = std::log(2.0 * nn / lambda_floor - 1.0);
      // Back off the bracket top a hair so floating-point rounding cannot
      // push lambda(eps_hi) below its floor.
      eps_hi -= 1e-9 * (1.0 + eps_hi);
      break;
    }
    case AmplificationMode::kBinarySimple: {
      eps_lo = 1.0;
      eps_hi = std::log(nn) - std::log(14.0 * std::log(4.0 / delta));
      if (eps_hi < eps_lo) {
        throw InfeasibleError(
            "SolveLocalForCentral: empty validity window for the simplified "
            "bound",
            0.0, 0.0);
      }
      break;
    }
    case AmplificationMode::kGeneric: {
      eps_lo = 0.0;
      eps_hi = std::log(nn / std::log(1.0 / delta)) / 2.0;
      if (!(eps_hi > 0.0)) {
        throw InfeasibleError(
            "SolveLocalForCentral: empty validity window for the generic "
            "bound",
            0.0, 0.0);
      }
      break;
    }
    default:
      throw std::invalid_argument("SolveLocalForCentral: unknown mode");
  }

  auto eval = [&](double eps) {
    return Amplify(AmplificationQuery{eps, n, delta}, mode).epsilon;
  };
  double feasible_lo = eval(std::max(eps_lo, 1e-12));
  double feasible_hi = eval(eps_hi);
  if (target.epsilon < feasible_lo || target.epsilon > feasible_hi) {
    throw InfeasibleError("SolveLocalForCentral: target central epsilon " +
                              std::to_string(target.epsilon) +
                              " outside the achievable range",
                          feasible_lo, feasible_hi);
  }
  // The amplified epsilon is nondecreasing in the local budget on the
  // window, so plain bisection converges.
  double lo = std::max(eps_lo, 1e-12), hi = eps_hi;
  for (int iter = 0; iter < 200; ++iter) {
    double mid = 0.5 * (lo + hi);
    if (eval(mid) < target.epsilon) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-9 * std::max(1.0, hi)) break;
  }
  double eps_local = 0.5 * (lo + hi);
  double achieved = eval(eps_local);
  if (std::fabs(achieved - target.epsilon) >
      1e-6 * std::max(target.epsilon, 1e-30)) {
    // The generic mode's min() branch can plateau at eps itself; a target in
    // the plateau is only achievable exactly at eps = target.
    if (mode == AmplificationMode::kGeneric &&
        std::fabs(eval(target.epsilon) - target.epsilon) <=
            1e-6 * target.epsilon &&
        target.epsilon <= eps_hi) {
      eps_local = target.epsilon;
    } else {
      throw InfeasibleError(
          "SolveLocalForCentral: bisection failed to meet the 1e-6 relative "
          "round-trip contract",
          feasible_lo, feasible_hi);
    }
  }
  return LocalBudget{eps_local, 0.0, PrivacyModel::kRemoval};
}

}  // namespace accounting
}  // namespace shuffledp
