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
// End-to-end experiment runner: configure a dataset and privacy targets,
// solve for the local budgets, simulate respondents through the shuffler,
// estimate, and emit CSV metrics plus reconstructed images.
#ifndef SHUFFLEDP_EXPERIMENT_H_
#define SHUFFLEDP_EXPERIMENT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shuffledp/accounting.h"
#include "shuffledp/data.h"

namespace shuffledp {
namespace experiment {

enum class Mechanism {
  kGaussianBaseline,
  kAttrFrag,
  kAttrAndReportFrag,
  kSampledAttr,
};

enum class SimulationPath { kAuto, kRespondents, kAggregate };

struct DatasetSpec {
  enum class Kind { kPgm, kPowerLaw, kCsv } kind = Kind::kPowerLaw;
  std::string path;        // pgm or csv
  double pgm_scale = 1.0;  // pgm only
  data::PowerLawSpec powerlaw;
};

// Either a central (epsilon_c, delta) target, solved back to local budgets,
// or a directly specified local budget.
struct PrivacyTarget {
  bool central = true;
  double epsilon = 1.0;
  double delta = 1e-8;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  std::vector<Mechanism> mechanisms = {Mechanism::kAttrFrag};
  std::vector<PrivacyTarget> targets;
  uint32_t tau = 4;  // fragments per report for kAttrAndReportFrag
  accounting::AmplificationMode accounting =
      accounting::AmplificationMode::kBinaryExact;
  uint64_t seed = 0;
  uint32_t trials = 1;
  uint32_t topk = 10;
  std::string out_dir = ".";
  uint32_t threads = 1;
  // Clamp estimates into [0, 1] before metrics; off by default because the
  // unbiased estimator is the analyzed one.
  bool clamp = false;
  SimulationPath simulation = SimulationPath::kAuto;
};

struct ResultRow {
  std::string mechanism;
  std::string status = "ok";  // "ok" or "infeasible: <reason>"
  double epsilon_central = 0.0;
  double delta = 0.0;
  double epsilon_linf = 0.0;
  double epsilon_l1 = 0.0;
  uint32_t tau = 1;
  // NaN in columns that do not apply to the mechanism.
  double epsilon_backstop = 0.0;
  double epsilon_fragment = 0.0;
  double sigma = 0.0;
  double rmse = 0.0, rmse_std = 0.0;
  double linf = 0.0, linf_std = 0.0;
  double topk_recall = 0.0, topk_recall_std = 0.0;
  double messages_per_respondent = 0.0;
  // Reported in the run manifest only, so results.csv stays byte-identical
  // across reruns of the same seed.
  double wall_time_s = 0.0;
};

// Named (n, delta) defaults for standalone accounting at realistic scales.
struct AccountingPreset {
  std::string name;
  uint64_t n;
  double delta;
  uint64_t domain_size;
};

const std::vector<AccountingPreset>& Presets();
std::optional<AccountingPreset> FindPreset(const std::string& name);

// Parses the key = value config format documented in the README.
ExperimentConfig ParseConfig(const std::string& text);
ExperimentConfig LoadConfigFile(const std::string& path);

// Fills only the privacy columns (no simulation): epsilon_linf at full
// exposure, epsilon_l1 at single-report exposure, and the central guarantee
// for the configured accounting mode.
ResultRow ReportPrivacy(const ExperimentConfig& config, Mechanism mechanism,
                        const PrivacyTarget& target, uint64_t n);

// Runs every (target x mechanism) row: solves budgets, simulates
// respondents -> shuffler -> estimator for the configured number of trials,
// writes <out_dir>/results.csv, reconstructed recon_<row>.pgm images for
// grid datasets, and <out_dir>/manifest.txt echoing the resolved
// configuration. Infeasible rows are reported, not fatal. Fully reproducible
// under the config seed.
std::vector<ResultRow> RunExperiment(const ExperimentConfig& config);

// The fragment budget paired with a backstop budget: solves
//   var(eps_f) = tau * var(eps_b),  var(e) = e^e/(e^e - 1)^2,
// so the fragment-averaging stage adds the same estimation variance as the
// backstop stage. Approaches eps_b - ln(tau) for large budgets.
double FragmentBudgetForBackstop(double epsilon_backstop, uint32_t tau);

}  // namespace experiment
}  // namespace shuffledp

#endif  // SHUFFLEDP_EXPERIMENT_H_
