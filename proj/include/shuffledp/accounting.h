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
// Closed-form privacy accounting for anonymized randomized-response
// reporting: local-to-central amplification bounds for shuffled reports,
// sequential composition of local randomizers, report-fragmenting budgets,
// advanced composition, and inverse solvers that hit a target central
// guarantee. All operations are deterministic pure functions of their
// arguments and are safe to call concurrently.
#ifndef SHUFFLEDP_ACCOUNTING_H_
#define SHUFFLEDP_ACCOUNTING_H_

#include <cstdint>

namespace shuffledp {
namespace accounting {

// Whether a budget is stated against the removal neighborhood (a respondent's
// report is replaced by a data-independent reference) or the replacement
// neighborhood (swapped for a worst-case alternative). Removal budgets are
// never looser: converting Replacement -> Removal keeps epsilon, and
// Removal -> Replacement at most doubles it.
enum class PrivacyModel { kRemoval, kReplacement };

// A local randomizer's budget.
struct LocalBudget {
  double epsilon = 0.0;
  double delta = 0.0;
  PrivacyModel model = PrivacyModel::kRemoval;
};

// What the analyzer can learn from the full anonymized collection.
struct CentralGuarantee {
  double epsilon = 0.0;
  double delta = 0.0;
};

// Inputs to an amplification-by-shuffling bound.
struct AmplificationQuery {
  double epsilon_local = 0.0;
  uint64_t n = 0;  // respondents contributing to the shuffle
  double delta = 0.0;
};

// Parameters of a report-fragmenting scheme: one hidden backstop
// randomization at epsilon_backstop, tau cheap re-randomizations at
// epsilon_fragment each, of which an adversary observes `exposed`.
struct FragmentPlan {
  uint32_t tau = 1;
  double epsilon_backstop = 0.0;
  double epsilon_fragment = 0.0;
  uint32_t exposed = 1;
};

struct CompositionQuery {
  double epsilon_step = 0.0;
  double delta_step = 0.0;
  uint32_t k = 1;           // number of composed mechanisms
  double delta_slack = 0.0; // the delta' added on top of k*delta_step
};

struct SgdPrivacyQuery {
  double epsilon_per_epoch = 0.0;
  uint32_t epochs = 1;
  uint64_t n = 0;
  double delta = 0.0;
};

enum class AmplificationMode { kBinaryExact, kBinarySimple, kGeneric };

// Probability that binary randomized response at the given budget flips the
// input bit: 1/(1+e^epsilon). Bijective from [0, inf) onto (0, 0.5].
double FlipProbability(double epsilon);

// Inverse of FlipProbability.
double FlipProbabilityInverse(double p);

// Central guarantee for n shuffled binary randomized-response reports,
// evaluated from the exact sum-estimation bound instantiated with
// lambda = 2n/(1+e^eps). Requires 14*log(4/delta) <= lambda <= n.
// Never exceeds AmplifyBinarySimple on the same query.
CentralGuarantee AmplifyBinaryExact(const AmplificationQuery& q);

// The simplified closed form sqrt(64*e^eps*log(4/delta)/n). Valid for
// eps in [1, log(n) - log(14*log(4/delta))] and delta >= n^(-log n).
CentralGuarantee AmplifyBinarySimple(const AmplificationQuery& q);

// Amplification for an arbitrary eps-LDP randomizer under shuffling:
// min(eps, kGenericAmplificationConstant*(e^eps - 1)*sqrt(log(1/delta)/n)).
// Requires eps <= log(n/log(1/delta))/2. The asymptotic statement hides its
// constant; see kGenericAmplificationConstant below for the pinned value.
CentralGuarantee AmplifyGeneric(const AmplificationQuery& q);

// Hidden constant of the generic amplification bound. The value 38.3 is
// calibrated so that the bound agrees with reference evaluations of the
// shuffled binary mechanism at moderate budgets; it is documented here so
// results are reproducible, and the bound is always taken jointly with the
// trivial LDP guarantee (the min above).
inline constexpr double kGenericAmplificationConstant = 38.3;

// Overall budget of running a second local randomizer on the output of a
// first: ln((e^(e1+e2)+1)/(e^e1+e^e2)). Symmetric, at most min(e1, e2), and
// zero iff either argument is zero.
double ComposeSequential(double epsilon1, double epsilon2);

// Local privacy loss of a fragment plan when `exposed` fragments are
// observed: ComposeSequential(eps_b, exposed*eps_f). Nondecreasing in
// `exposed` and bounded by min(eps_b, tau*eps_f) at full exposure.
LocalBudget ReportFragLocal(const FragmentPlan& plan);

// Central guarantee of the fragmenting scheme over n respondents:
// min{ sqrt(8*tau*eps_f*log^2(tau*eps_f/delta)/n),
//      sqrt(64*e^eps_b*log(4/delta)/n) }.
// Requires eps_f > 1 and delta < 1/2.
CentralGuarantee ReportFragCentral(const FragmentPlan& plan, uint64_t n,
                                   double delta);

// Advanced composition of k (eps, delta)-DP mechanisms with slack delta':
// (k*eps^2/2 + sqrt(k)*eps*sqrt(2*log(sqrt(k*pi/2)*eps/delta')),
//  delta' + k*delta).
// eps = 0 composes to (0, delta' + k*delta). Requires the log argument to
// exceed 1; otherwise basic composition (k*eps, k*delta) applies and this
// routine refuses.
CentralGuarantee AdvancedComposition(const CompositionQuery& q);

// Central guarantee of LDP-SGD over T epochs: per-epoch generic
// amplification at delta/(2T) each, then advanced composition with slack
// delta/2, so the total delta equals the query delta exactly.
// Requires epsilon_per_epoch <= log(n)/4.
CentralGuarantee LdpSgdCentral(const SgdPrivacyQuery& q);

// Restates a budget in the other neighborhood model using the generic
// two-sided bound: Removal -> Replacement doubles epsilon; Replacement ->
// Removal keeps it (both are safe upper bounds). Idempotent when the target
// model equals the current one.
LocalBudget ConvertModel(const LocalBudget& budget, PrivacyModel target);

// Lower bound on the privacy parameter implied by a membership-inference
// attack operating point: -ln(1 - (tpr - fpr)). Returns 0 when tpr <= fpr.
double MiLowerBound(double tpr, double fpr);

// Smallest Gaussian noise scale sigma (on a grid of multiples of 1e-4)
// such that the analytic condition
//   Phi(D/(2s) - eps*s/D) - e^eps * Phi(-D/(2s) - eps*s/D) <= delta
// holds for sensitivity D.
double GaussianSigma(double epsilon, double delta, double sensitivity);

// Inverts the chosen amplification bound: finds the local budget whose
// amplification equals the target central epsilon to 1e-6 relative accuracy.
// Deterministic bisection; throws InfeasibleError (with the feasible central
// range) when the target is outside the mode's validity window.
LocalBudget SolveLocalForCentral(const CentralGuarantee& target, uint64_t n,
                                 AmplificationMode mode);

// Dispatches on `mode`.
CentralGuarantee Amplify(const AmplificationQuery& q, AmplificationMode mode);

}  // namespace accounting
}  // namespace shuffledp

#endif  // SHUFFLEDP_ACCOUNTING_H_
