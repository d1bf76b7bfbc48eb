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
#include "shuffledp/experiment.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "shuffledp/errors.h"
#include "shuffledp/estimation.h"
#include "shuffledp/randomizers.h"
#include "shuffledp/shuffler.h"

namespace shuffledp {
namespace experiment {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

using accounting::AmplificationMode;
using accounting::AmplificationQuery;
using accounting::CentralGuarantee;
using accounting::FragmentPlan;

std::string MechanismName(Mechanism m) {
  switch (m) {
    case Mechanism::kGaussianBaseline:
      return "gaussian_baseline";
    case Mechanism::kAttrFrag:
      return "attr_frag";
    case Mechanism::kAttrAndReportFrag:
      return "attr_report_frag";
    case Mechanism::kSampledAttr:
      return "sampled_attr";
  }
  return "?";
}

Mechanism MechanismFromName(const std::string& name) {
  if (name == "gaussian_baseline") return Mechanism::kGaussianBaseline;
  if (name == "attr_frag") return Mechanism::kAttrFrag;
  if (name == "attr_report_frag") return Mechanism::kAttrAndReportFrag;
  if (name == "sampled_attr") return Mechanism::kSampledAttr;
  throw std::invalid_argument("unknown mechanism '" + name + "'");
}

AmplificationMode ModeFromName(const std::string& name) {
  if (name == "binary_exact") return AmplificationMode::kBinaryExact;
  if (name == "binary_simple") return AmplificationMode::kBinarySimple;
  if (name == "generic") return AmplificationMode::kGeneric;
  throw std::invalid_argument("unknown accounting mode '" + name + "'");
}

std::string ModeName(AmplificationMode mode) {
  switch (mode) {
    case AmplificationMode::kBinaryExact:
      return "binary_exact";
    case AmplificationMode::kBinarySimple:
      return "binary_simple";
    case AmplificationMode::kGeneric:
      return "generic";
  }
  return "?";
}

// Resolved per-row privacy parameters.
struct RowBudget {
  std::string status = "ok";
  double epsilon_central = kNaN;
  double delta = kNaN;
  double epsilon_linf = kNaN;
  double epsilon_l1 = kNaN;
  double epsilon_backstop = kNaN;
  double epsilon_fragment = kNaN;
  double sigma = kNaN;
  uint32_t tau = 1;
};

// The final central claim is always the minimum of the amplification bound
// and the trivial one (an eps-LDP collection is centrally eps-DP); when the
// window of the chosen bound excludes the budget, the trivial claim stands.
double AmplifyOrTrivial(double epsilon_local, uint64_t n, double delta,
                        AmplificationMode mode) {
  try {
    return accounting::Amplify(AmplificationQuery{epsilon_local, n, delta},
                               mode)
        .epsilon;
  } catch (const PreconditionError&) {
    return epsilon_local;
  }
}

RowBudget ResolveBudgetOrThrow(Mechanism mechanism,
                               const PrivacyTarget& target, uint32_t tau,
                               AmplificationMode mode, uint64_t n);

RowBudget ResolveBudget(Mechanism mechanism, const PrivacyTarget& target,
                        uint32_t tau, AmplificationMode mode, uint64_t n) {
  try {
    return ResolveBudgetOrThrow(mechanism, target, tau, mode, n);
  } catch (const std::exception& e) {
    RowBudget b;
    b.delta = target.delta;
    b.status = std::string("infeasible: ") + e.what();
    return b;
  }
}

RowBudget ResolveBudgetOrThrow(Mechanism mechanism,
                               const PrivacyTarget& target, uint32_t tau,
                               AmplificationMode mode, uint64_t n) {
  RowBudget b;
  b.delta = target.delta;
  switch (mechanism) {
    case Mechanism::kGaussianBaseline: {
      if (!target.central) {
        b.status = "infeasible: gaussian baseline needs a central target";
        return b;
      }
      b.epsilon_central = target.epsilon;
      b.epsilon_linf = kInf;
      b.epsilon_l1 = kInf;
      b.sigma = std::isinf(target.epsilon)
                    ? 0.0
                    : accounting::GaussianSigma(target.epsilon, target.delta,
                                                /*sensitivity=*/1.0);
      return b;
    }
    case Mechanism::kAttrFrag: {
      double eps_local;
      if (target.central) {
        eps_local = accounting::SolveLocalForCentral(
                        CentralGuarantee{target.epsilon, target.delta}, n,
                        mode)
                        .epsilon;
        b.epsilon_central = target.epsilon;
      } else {
        eps_local = target.epsilon;
        b.epsilon_central =
            AmplifyOrTrivial(eps_local, n, target.delta, mode);
      }
      b.epsilon_linf = eps_local;
      b.epsilon_l1 = eps_local;
      return b;
    }
    case Mechanism::kAttrAndReportFrag: {
      double eps_b;
      if (target.central) {
        eps_b = accounting::SolveLocalForCentral(
                    CentralGuarantee{target.epsilon, target.delta}, n, mode)
                    .epsilon;
        b.epsilon_central = target.epsilon;
      } else {
        eps_b = target.epsilon;
        b.epsilon_central = AmplifyOrTrivial(eps_b, n, target.delta, mode);
      }
      double eps_f = FragmentBudgetForBackstop(eps_b, tau);
      FragmentPlan plan{tau, eps_b, eps_f, tau};
      b.tau = tau;
      b.epsilon_backstop = eps_b;
      b.epsilon_fragment = eps_f;
      b.epsilon_linf = accounting::ReportFragLocal(plan).epsilon;
      plan.exposed = 1;
      b.epsilon_l1 = accounting::ReportFragLocal(plan).epsilon;
      // Cross-check the fragmenting theorem when its hypothesis applies; the
      // fragment rows may sharpen the backstop-derived claim.
      if (eps_f > 1.0 && target.delta > 0.0 && target.delta < 0.5) {
        CentralGuarantee frag_bound = accounting::ReportFragCentral(
            FragmentPlan{tau, eps_b, eps_f, tau}, n, target.delta);
        b.epsilon_central = std::min(b.epsilon_central, frag_bound.epsilon);
      }
      return b;
    }
    case Mechanism::kSampledAttr: {
      // Only the generic amplification theorem covers this randomizer.
      if (target.central) {
        if (mode != AmplificationMode::kGeneric) {
          b.status =
              "infeasible: sampled_attr supports central targets only under "
              "generic accounting";
          return b;
        }
        b.epsilon_linf = accounting::SolveLocalForCentral(
                             CentralGuarantee{target.epsilon, target.delta},
                             n, mode)
                             .epsilon;
        b.epsilon_central = target.epsilon;
      } else {
        b.epsilon_linf = target.epsilon;
        b.epsilon_central = mode == AmplificationMode::kGeneric
                                ? AmplifyOrTrivial(target.epsilon, n,
                                                   target.delta, mode)
                                : target.epsilon;
      }
      b.epsilon_l1 = b.epsilon_linf;
      return b;
    }
  }
  b.status = "infeasible: unknown mechanism";
  return b;
}

struct TrialMetrics {
  double rmse = 0.0;
  double linf = 0.0;
  double topk_recall = 0.0;
};

// One simulated collection round, aggregate path: per-attribute report sums
// are drawn from their exact binomial law (the summed shuffler release of n
// independent randomized bits).
std::vector<uint64_t> AggregateBitSums(const std::vector<uint64_t>& counts,
                                       uint64_t n, double epsilon, Rng& rng) {
  double p = accounting::FlipProbability(epsilon);
  std::vector<uint64_t> sums(counts.size());
  for (size_t j = 0; j < counts.size(); ++j) {
    int64_t ones = static_cast<int64_t>(counts[j]);
    int64_t zeros = static_cast<int64_t>(n) - ones;
    sums[j] = static_cast<uint64_t>(rng.Binomial(ones, 1.0 - p) +
                                    rng.Binomial(zeros, p));
  }
  return sums;
}

// One simulated collection round. Estimates are returned in count units so
// the noiseless Gaussian path reproduces the dataset bit-exactly.
std::vector<double> SimulateTrial(const std::vector<uint64_t>& counts,
                                  uint64_t n, Mechanism mechanism,
                                  const RowBudget& budget, SimulationPath path,
                                  Rng& rng) {
  size_t k = counts.size();
  double nn = static_cast<double>(n);
  bool respondents =
      path == SimulationPath::kRespondents ||
      (path == SimulationPath::kAuto &&
       static_cast<double>(n) * static_cast<double>(k) <= 2e6);
  auto to_counts = [&](const estimation::HistogramEstimate& est) {
    std::vector<double> out(est.h_hat.size());
    for (size_t j = 0; j < out.size(); ++j) out[j] = est.h_hat[j] * nn;
    return out;
  };
  switch (mechanism) {
    case Mechanism::kGaussianBaseline: {
      std::vector<double> est(k);
      for (size_t j = 0; j < k; ++j) {
        est[j] = static_cast<double>(counts[j]);
        if (budget.sigma > 0.0) est[j] += budget.sigma * rng.Gaussian();
      }
      return est;
    }
    case Mechanism::kAttrFrag: {
      if (respondents) {
        // One shuffler instance per attribute, a single channel each.
        std::vector<shuffler::ShufflerInstance> instances;
        instances.reserve(k);
        for (size_t j = 0; j < k; ++j) {
          instances.emplace_back(static_cast<uint32_t>(j));
          instances.back().DeclareChannel(0);
        }
        uint64_t respondent = 0;
        for (size_t j = 0; j < k; ++j) {
          for (uint64_t c = 0; c < counts[j]; ++c, ++respondent) {
            auto reports = randomizers::AttFragKRappor(
                randomizers::OneHotRecord{static_cast<uint32_t>(j),
                                          static_cast<uint32_t>(k)},
                budget.epsilon_linf, rng, static_cast<uint32_t>(k));
            for (const auto& r : reports) {
              instances[r.destination.instance].Ingest(
                  r.destination.channel,
                  std::string(1, static_cast<char>(r.value)), respondent);
            }
          }
        }
        std::vector<uint64_t> sums(k);
        for (size_t j = 0; j < k; ++j) {
          sums[j] = instances[j].ReleaseSummed(0)[0];
        }
        return to_counts(
            estimation::EstimateHistogram(sums, n, budget.epsilon_linf));
      }
      std::vector<uint64_t> sums =
          AggregateBitSums(counts, n, budget.epsilon_linf, rng);
      return to_counts(
          estimation::EstimateHistogram(sums, n, budget.epsilon_linf));
    }
    case Mechanism::kAttrAndReportFrag: {
      FragmentPlan plan{budget.tau, budget.epsilon_backstop,
                        budget.epsilon_fragment, budget.tau};
      if (respondents) {
        // One instance per fragment index, one channel per attribute.
        std::vector<shuffler::ShufflerInstance> instances;
        instances.reserve(budget.tau);
        for (uint32_t i = 0; i < budget.tau; ++i) {
          instances.emplace_back(i);
          for (size_t j = 0; j < k; ++j) instances.back().DeclareChannel(j);
        }
        uint64_t respondent = 0;
        for (size_t j = 0; j < k; ++j) {
          for (uint64_t c = 0; c < counts[j]; ++c, ++respondent) {
            auto frags = randomizers::AttAndReportFrag(
                randomizers::OneHotRecord{static_cast<uint32_t>(j),
                                          static_cast<uint32_t>(k)},
                plan, rng);
            for (const auto& f : frags) {
              instances[f.inner.destination.instance].Ingest(
                  f.inner.destination.channel,
                  std::string(1, static_cast<char>(f.inner.value)),
                  respondent);
            }
          }
        }
        std::vector<std::vector<uint64_t>> fragment_sums(
            budget.tau, std::vector<uint64_t>(k));
        for (uint32_t i = 0; i < budget.tau; ++i) {
          for (size_t j = 0; j < k; ++j) {
            fragment_sums[i][j] = instances[i].ReleaseSummed(j)[0];
          }
        }
        return to_counts(
            estimation::EstimateFromFragments(fragment_sums, n, plan));
      }
      // Backstop layer first; fragment rows then re-randomize the same
      // backstop tallies, preserving the cross-row correlation.
      double p_b = accounting::FlipProbability(budget.epsilon_backstop);
      double p_f = accounting::FlipProbability(budget.epsilon_fragment);
      std::vector<int64_t> backstop_ones(k);
      for (size_t j = 0; j < k; ++j) {
        int64_t ones = static_cast<int64_t>(counts[j]);
        int64_t zeros = static_cast<int64_t>(n) - ones;
        backstop_ones[j] = rng.Binomial(ones, 1.0 - p_b) +
                           rng.Binomial(zeros, p_b);
      }
      std::vector<std::vector<uint64_t>> fragment_sums(
          budget.tau, std::vector<uint64_t>(k));
      for (uint32_t i = 0; i < budget.tau; ++i) {
        for (size_t j = 0; j < k; ++j) {
          int64_t ones = backstop_ones[j];
          int64_t zeros = static_cast<int64_t>(n) - ones;
          fragment_sums[i][j] = static_cast<uint64_t>(
              rng.Binomial(ones, 1.0 - p_f) + rng.Binomial(zeros, p_f));
        }
      }
      return to_counts(
          estimation::EstimateFromFragments(fragment_sums, n, plan));
    }
    case Mechanism::kSampledAttr: {
      // Each respondent reports a single uniformly chosen attribute with the
      // full budget; estimation debiases per attribute over its receivers.
      std::vector<uint64_t> received(k, 0), ones(k, 0);
      double p = accounting::FlipProbability(budget.epsilon_linf);
      for (size_t j = 0; j < k; ++j) {
        for (uint64_t c = 0; c < counts[j]; ++c) {
          uint64_t attr = rng.UniformInt(k);
          uint8_t bit = attr == j ? 1 : 0;
          if (rng.Bernoulli(p)) bit = static_cast<uint8_t>(1 - bit);
          ++received[attr];
          ones[attr] += bit;
        }
      }
      std::vector<double> est(k, 0.0);
      for (size_t j = 0; j < k; ++j) {
        if (received[j] == 0) continue;
        double rate = static_cast<double>(ones[j]) /
                      static_cast<double>(received[j]);
        est[j] = randomizers::DebiasBit(rate, budget.epsilon_linf) * nn;
      }
      return est;
    }
  }
  throw std::logic_error("SimulateTrial: unknown mechanism");
}

double ExpectedMessages(Mechanism mechanism, const RowBudget& budget,
                        size_t k) {
  switch (mechanism) {
    case Mechanism::kGaussianBaseline:
      return 0.0;
    case Mechanism::kAttrFrag: {
      // Expected set bits in the sparse wire encoding of one report vector.
      double p = accounting::FlipProbability(budget.epsilon_linf);
      return (1.0 - p) + static_cast<double>(k - 1) * p;
    }
    case Mechanism::kAttrAndReportFrag: {
      double p_b = accounting::FlipProbability(budget.epsilon_backstop);
      double p_f = accounting::FlipProbability(budget.epsilon_fragment);
      double one_stays = (1.0 - p_b) * (1.0 - p_f) + p_b * p_f;
      double zero_flips = p_b * (1.0 - p_f) + (1.0 - p_b) * p_f;
      return static_cast<double>(budget.tau) *
             (one_stays + static_cast<double>(k - 1) * zero_flips);
    }
    case Mechanism::kSampledAttr:
      return 1.0;
  }
  return 0.0;
}

std::string FormatDouble(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void WriteResultsCsv(const std::vector<ResultRow>& rows,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# shuffledp results schema v1\n";
  out << "mechanism,status,epsilon_central,delta,epsilon_linf,epsilon_l1,tau,"
         "epsilon_backstop,epsilon_fragment,sigma,rmse,rmse_std,linf,"
         "linf_std,topk_recall,topk_recall_std,messages_per_respondent\n";
  for (const ResultRow& r : rows) {
    out << r.mechanism << ',' << r.status << ',' << FormatDouble(r.epsilon_central)
        << ',' << FormatDouble(r.delta) << ',' << FormatDouble(r.epsilon_linf)
        << ',' << FormatDouble(r.epsilon_l1) << ',' << r.tau << ','
        << FormatDouble(r.epsilon_backstop) << ','
        << FormatDouble(r.epsilon_fragment) << ',' << FormatDouble(r.sigma)
        << ',' << FormatDouble(r.rmse) << ',' << FormatDouble(r.rmse_std)
        << ',' << FormatDouble(r.linf) << ',' << FormatDouble(r.linf_std)
        << ',' << FormatDouble(r.topk_recall) << ','
        << FormatDouble(r.topk_recall_std) << ','
        << FormatDouble(r.messages_per_respondent) << '\n';
  }
}

std::vector<std::string> SplitList(const std::string& value) {
  std::vector<std::string> items;
  std::string item;
  std::stringstream ss(value);
  while (std::getline(ss, item, ',')) {
    size_t a = item.find_first_not_of(" \t");
    size_t b = item.find_last_not_of(" \t");
    if (a == std::string::npos) continue;
    items.push_back(item.substr(a, b - a + 1));
  }
  return items;
}

}  // namespace

double FragmentBudgetForBackstop(double epsilon_backstop, uint32_t tau) {
  if (!(epsilon_backstop > 0.0)) {
    throw std::invalid_argument(
        "FragmentBudgetForBackstop: backstop budget must be > 0");
  }
  if (tau < 1) {
    throw std::invalid_argument("FragmentBudgetForBackstop: tau must be >= 1");
  }
  if (tau == 1) return epsilon_backstop;
  // var(e) = e^e/(e^e-1)^2; solve var(eps_f) = tau * var(eps_b) for eps_f.
  double eb = epsilon_backstop;
  double var_b = std::exp(eb) / (std::expm1(eb) * std::expm1(eb));
  double inv_tv = 1.0 / (static_cast<double>(tau) * var_b);
  // u/(u-1)^2 = tau*var_b with u = e^eps_f: u^2 - (2 + inv_tv) u + 1 = 0.
  double a = 2.0 + inv_tv;
  double u_minus_1 = 0.5 * (inv_tv + std::sqrt(inv_tv * (a + 2.0)));
  return std::log1p(u_minus_1);
}

const std::vector<AccountingPreset>& Presets() {
  // n and delta defaults at the scale of the reference workloads; the
  // domain sizes are indicative only.
  static const std::vector<AccountingPreset> kPresets = {
      {"sparse_image", 1907000, 5e-8, 65536},
      {"dense_image", 50500000, 5e-9, 262144},
      {"location_grid", 238000000, 5e-10, 2795520},
      {"heavy_hitter", 200000000, 1e-9, 1700000},
  };
  return kPresets;
}

std::optional<AccountingPreset> FindPreset(const std::string& name) {
  for (const AccountingPreset& p : Presets()) {
    if (p.name == name) return p;
  }
  return std::nullopt;
}

ExperimentConfig ParseConfig(const std::string& text) {
  ExperimentConfig cfg;
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        throw ParseError("config line " + std::to_string(line_no) +
                             " is not 'key = value'",
                         line_no);
      }
      continue;
    }
    auto trim = [](std::string s) {
      size_t a = s.find_first_not_of(" \t\r\"");
      size_t b = s.find_last_not_of(" \t\r\"");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ParseError("config line " + std::to_string(line_no) +
                           " has an empty key",
                       line_no);
    }
    kv[key] = value;
  }

  auto get = [&](const std::string& key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    return it->second;
  };

  if (auto kind = get("dataset.kind")) {
    if (*kind == "pgm") {
      cfg.dataset.kind = DatasetSpec::Kind::kPgm;
    } else if (*kind == "powerlaw") {
      cfg.dataset.kind = DatasetSpec::Kind::kPowerLaw;
    } else if (*kind == "csv") {
      cfg.dataset.kind = DatasetSpec::Kind::kCsv;
    } else {
      throw std::invalid_argument("dataset.kind must be pgm|powerlaw|csv");
    }
  }
  if (auto v = get("dataset.path")) cfg.dataset.path = *v;
  if (auto v = get("dataset.scale")) cfg.dataset.pgm_scale = std::stod(*v);
  if (auto v = get("powerlaw.domain_size")) {
    cfg.dataset.powerlaw.domain_size = std::stoull(*v);
  }
  if (auto v = get("powerlaw.exponent")) {
    cfg.dataset.powerlaw.exponent = std::stod(*v);
  }
  if (auto v = get("powerlaw.n")) cfg.dataset.powerlaw.total_n = std::stoull(*v);
  if (auto v = get("powerlaw.heavy_hitters")) {
    for (const std::string& item : SplitList(*v)) {
      size_t colon = item.find(':');
      if (colon == std::string::npos) {
        throw std::invalid_argument(
            "powerlaw.heavy_hitters entries must be index:mass");
      }
      cfg.dataset.powerlaw.heavy_hitters.emplace_back(
          std::stoull(item.substr(0, colon)),
          std::stod(item.substr(colon + 1)));
    }
  }

  if (auto v = get("mechanisms")) {
    cfg.mechanisms.clear();
    for (const std::string& name : SplitList(*v)) {
      cfg.mechanisms.push_back(MechanismFromName(name));
    }
  }

  bool has_central = kv.count("targets.central") > 0;
  bool has_local = kv.count("targets.local") > 0;
  if (has_central && has_local) {
    throw std::invalid_argument(
        "config must use exactly one target form: targets.central or "
        "targets.local");
  }
  double delta = 1e-8;
  if (auto v = get("targets.delta")) delta = std::stod(*v);
  if (has_central) {
    for (const std::string& e : SplitList(*get("targets.central"))) {
      double eps = e == "inf" ? kInf : std::stod(e);
      cfg.targets.push_back(PrivacyTarget{true, eps, delta});
    }
  } else if (has_local) {
    for (const std::string& e : SplitList(*get("targets.local"))) {
      cfg.targets.push_back(PrivacyTarget{false, std::stod(e), delta});
    }
  }

  if (auto v = get("tau")) cfg.tau = static_cast<uint32_t>(std::stoul(*v));
  if (auto v = get("accounting")) cfg.accounting = ModeFromName(*v);
  if (auto v = get("seed")) cfg.seed = std::stoull(*v);
  if (auto v = get("trials")) cfg.trials = static_cast<uint32_t>(std::stoul(*v));
  if (auto v = get("topk")) cfg.topk = static_cast<uint32_t>(std::stoul(*v));
  if (auto v = get("out_dir")) cfg.out_dir = *v;
  if (auto v = get("threads")) {
    cfg.threads = static_cast<uint32_t>(std::stoul(*v));
  }
  if (auto v = get("clamp")) cfg.clamp = (*v == "true" || *v == "1");
  if (auto v = get("simulation")) {
    if (*v == "auto") {
      cfg.simulation = SimulationPath::kAuto;
    } else if (*v == "respondents") {
      cfg.simulation = SimulationPath::kRespondents;
    } else if (*v == "aggregate") {
      cfg.simulation = SimulationPath::kAggregate;
    } else {
      throw std::invalid_argument(
          "simulation must be auto|respondents|aggregate");
    }
  }
  return cfg;
}

ExperimentConfig LoadConfigFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str());
}

ResultRow ReportPrivacy(const ExperimentConfig& config, Mechanism mechanism,
                        const PrivacyTarget& target, uint64_t n) {
  RowBudget budget =
      ResolveBudget(mechanism, target, config.tau, config.accounting, n);
  ResultRow row;
  row.mechanism = MechanismName(mechanism);
  row.status = budget.status;
  row.epsilon_central = budget.epsilon_central;
  row.delta = budget.delta;
  row.epsilon_linf = budget.epsilon_linf;
  row.epsilon_l1 = budget.epsilon_l1;
  row.tau = budget.tau;
  row.epsilon_backstop = budget.epsilon_backstop;
  row.epsilon_fragment = budget.epsilon_fragment;
  row.sigma = budget.sigma;
  row.rmse = row.rmse_std = row.linf = row.linf_std = kNaN;
  row.topk_recall = row.topk_recall_std = kNaN;
  row.messages_per_respondent = kNaN;
  return row;
}

std::vector<ResultRow> RunExperiment(const ExperimentConfig& config) {
  if (config.targets.empty()) {
    throw std::invalid_argument("RunExperiment: no privacy targets");
  }
  if (config.trials < 1) {
    throw std::invalid_argument("RunExperiment: trials must be >= 1");
  }

  std::filesystem::create_directories(config.out_dir);

  // Dataset.
  std::vector<uint64_t> counts;
  uint32_t grid_width = 0, grid_height = 0;
  double metric_scale = 1.0;
  switch (config.dataset.kind) {
    case DatasetSpec::Kind::kPgm: {
      data::GridDataset grid =
          data::LoadGridFromPgm(config.dataset.path, config.dataset.pgm_scale);
      counts = grid.counts;
      grid_width = grid.width;
      grid_height = grid.height;
      // Image-space metrics are reported in luminosity units.
      metric_scale = config.dataset.pgm_scale;
      break;
    }
    case DatasetSpec::Kind::kPowerLaw: {
      Rng rng(Substream(RandomStream{config.seed, 0}, 0xda7a5e7));
      counts = data::SamplePowerLaw(config.dataset.powerlaw, rng);
      // Keep the synthesized population alongside the results so the run is
      // auditable without re-deriving it from the seed.
      data::WriteCountsCsv(counts, config.out_dir + "/dataset_counts.csv");
      break;
    }
    case DatasetSpec::Kind::kCsv:
      counts = data::LoadCountsCsv(config.dataset.path);
      break;
  }
  uint64_t n = 0;
  for (uint64_t c : counts) n += c;
  if (n == 0) throw std::invalid_argument("RunExperiment: dataset is empty");
  size_t k = counts.size();

  std::vector<double> truth(k);
  for (size_t j = 0; j < k; ++j) {
    truth[j] = static_cast<double>(counts[j]) / metric_scale;
  }

  struct RowTask {
    Mechanism mechanism;
    PrivacyTarget target;
    size_t index;
  };
  std::vector<RowTask> tasks;
  for (const PrivacyTarget& target : config.targets) {
    for (Mechanism mechanism : config.mechanisms) {
      tasks.push_back(RowTask{mechanism, target, tasks.size()});
    }
  }
  std::vector<ResultRow> rows(tasks.size());

  std::mutex io_mutex;
  auto run_task = [&](const RowTask& task) {
    auto start = std::chrono::steady_clock::now();
    ResultRow row =
        ReportPrivacy(config, task.mechanism, task.target, n);
    RowBudget budget = ResolveBudget(task.mechanism, task.target, config.tau,
                                     config.accounting, n);
    if (budget.status == "ok") {
      row.messages_per_respondent =
          ExpectedMessages(task.mechanism, budget, k);
      std::vector<TrialMetrics> metrics(config.trials);
      for (uint32_t trial = 0; trial < config.trials; ++trial) {
        Rng rng(Substream(RandomStream{config.seed, 1},
                          (static_cast<uint64_t>(task.index) << 20) | trial));
        std::vector<double> est_counts = SimulateTrial(
            counts, n, task.mechanism, budget, config.simulation, rng);
        std::vector<double> est_units(k);
        for (size_t j = 0; j < k; ++j) {
          double c = est_counts[j];
          if (config.clamp) c = std::clamp(c, 0.0, static_cast<double>(n));
          est_units[j] = c / metric_scale;
        }
        estimation::ErrorReport err =
            estimation::ErrorMetrics(est_units, truth, config.topk);
        metrics[trial] = TrialMetrics{err.rmse, err.linf, err.topk_recall};
        if (trial == 0 && grid_width > 0) {
          estimation::HistogramEstimate for_image;
          for_image.n = n;
          for_image.h_hat.resize(k);
          for (size_t j = 0; j < k; ++j) {
            for_image.h_hat[j] = est_counts[j] / static_cast<double>(n);
          }
          std::lock_guard<std::mutex> lock(io_mutex);
          data::WriteEstimateToPgm(
              for_image, grid_width, grid_height,
              config.out_dir + "/recon_" + std::to_string(task.index) +
                  ".pgm",
              config.dataset.pgm_scale);
        }
      }
      auto mean_std = [&](auto pick) {
        double mean = 0.0;
        for (const auto& m : metrics) mean += pick(m);
        mean /= metrics.size();
        double var = 0.0;
        for (const auto& m : metrics) {
          var += (pick(m) - mean) * (pick(m) - mean);
        }
        double sd = metrics.size() > 1
                        ? std::sqrt(var / (metrics.size() - 1))
                        : 0.0;
        return std::pair<double, double>(mean, sd);
      };
      std::tie(row.rmse, row.rmse_std) =
          mean_std([](const TrialMetrics& m) { return m.rmse; });
      std::tie(row.linf, row.linf_std) =
          mean_std([](const TrialMetrics& m) { return m.linf; });
      std::tie(row.topk_recall, row.topk_recall_std) =
          mean_std([](const TrialMetrics& m) { return m.topk_recall; });
    }
    row.wall_time_s = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
    rows[task.index] = std::move(row);
  };

  uint32_t workers = std::max<uint32_t>(1, config.threads);
  if (workers == 1) {
    for (const RowTask& task : tasks) run_task(task);
  } else {
    std::vector<std::thread> pool;
    std::atomic<size_t> next{0};
    for (uint32_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          size_t i = next.fetch_add(1);
          if (i >= tasks.size()) return;
          run_task(tasks[i]);
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }

  WriteResultsCsv(rows, config.out_dir + "/results.csv");

  // Manifest: the resolved configuration plus timings. Not part of the
  // byte-stability contract.
  std::ofstream manifest(config.out_dir + "/manifest.txt");
  switch (config.dataset.kind) {
    case DatasetSpec::Kind::kPgm:
      manifest << "dataset.kind = pgm\n"
               << "dataset.path = " << config.dataset.path << "\n"
               << "dataset.scale = " << config.dataset.pgm_scale << "\n";
      break;
    case DatasetSpec::Kind::kPowerLaw:
      manifest << "dataset.kind = powerlaw\n"
               << "powerlaw.domain_size = "
               << config.dataset.powerlaw.domain_size << "\n"
               << "powerlaw.exponent = " << config.dataset.powerlaw.exponent
               << "\n"
               << "powerlaw.n = " << config.dataset.powerlaw.total_n << "\n";
      break;
    case DatasetSpec::Kind::kCsv:
      manifest << "dataset.kind = csv\n"
               << "dataset.path = " << config.dataset.path << "\n";
      break;
  }
  manifest << "mechanisms =";
  for (size_t i = 0; i < config.mechanisms.size(); ++i) {
    manifest << (i ? ", " : " ") << MechanismName(config.mechanisms[i]);
  }
  manifest << "\n";
  for (const PrivacyTarget& t : config.targets) {
    manifest << (t.central ? "target.central = " : "target.local = ")
             << FormatDouble(t.epsilon) << " (delta = " << FormatDouble(t.delta)
             << ")\n";
  }
  manifest << "seed = " << config.seed << "\n";
  manifest << "trials = " << config.trials << "\n";
  manifest << "tau = " << config.tau << "\n";
  manifest << "topk = " << config.topk << "\n";
  manifest << "accounting = " << ModeName(config.accounting) << "\n";
  manifest << "clamp = " << (config.clamp ? "true" : "false") << "\n";
  manifest << "n = " << n << "\n";
  manifest << "domain_size = " << k << "\n";
  manifest << "threads = " << config.threads << "\n";
  for (size_t i = 0; i < rows.size(); ++i) {
    manifest << "row " << i << ": " << rows[i].mechanism
             << " status=" << rows[i].status
             << " wall_time_s=" << rows[i].wall_time_s << "\n";
  }
  return rows;
}

}  // namespace experiment
}  // namespace shuffledp
