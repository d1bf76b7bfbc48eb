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
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "shuffledp/accounting.h"
#include "shuffledp/experiment.h"

namespace {

using shuffledp::accounting::AmplificationMode;
using shuffledp::accounting::AmplificationQuery;
using shuffledp::accounting::CentralGuarantee;
using shuffledp::accounting::FragmentPlan;

AmplificationMode ParseMode(const std::string& name) {
  if (name == "binary_exact") return AmplificationMode::kBinaryExact;
  if (name == "binary_simple") return AmplificationMode::kBinarySimple;
  if (name == "generic") return AmplificationMode::kGeneric;
  throw CLI::ValidationError("--mode must be binary_exact|binary_simple|generic");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shuffledp: anonymized randomized-response reporting simulator"};
  app.require_subcommand(1);

  // run --config <path> [--seed N] [--out-dir D] [--threads T]
  auto* run = app.add_subcommand("run", "run an experiment config");
  std::string config_path;
  std::optional<uint64_t> seed_override;
  std::optional<std::string> out_dir_override;
  std::optional<uint32_t> threads_override;
  run->add_option("--config", config_path, "key = value config file")
      ->required();
  run->add_option("--seed", seed_override, "override the config seed");
  run->add_option("--out-dir", out_dir_override, "override the output directory");
  run->add_option("--threads", threads_override, "parallel row workers");

  // account: standalone privacy accounting.
  auto* account = app.add_subcommand("account", "standalone accounting");
  std::optional<double> eps_local, eps_central;
  double delta = 1e-8;
  uint64_t n = 0;
  std::string mode_name = "binary_exact";
  std::string preset_name;
  std::optional<double> eps_backstop, eps_fragment;
  uint32_t tau = 1;
  account->add_option("--epsilon-local", eps_local,
                      "local budget to amplify to a central guarantee");
  account->add_option("--epsilon-central", eps_central,
                      "central target to solve back to a local budget");
  account->add_option("--delta", delta, "delta of the guarantee");
  account->add_option("--n", n, "number of shuffled respondents");
  account->add_option("--mode", mode_name,
                      "binary_exact|binary_simple|generic");
  account->add_option("--preset", preset_name,
                      "named (n, delta) defaults: sparse_image, dense_image, "
                      "location_grid, heavy_hitter");
  account->add_option("--epsilon-backstop", eps_backstop,
                      "report-fragmenting backstop budget");
  account->add_option("--epsilon-fragment", eps_fragment,
                      "report-fragmenting per-fragment budget");
  account->add_option("--tau", tau, "number of report fragments");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      shuffledp::experiment::ExperimentConfig cfg =
          shuffledp::experiment::LoadConfigFile(config_path);
      if (seed_override) cfg.seed = *seed_override;
      if (out_dir_override) cfg.out_dir = *out_dir_override;
      if (threads_override) cfg.threads = *threads_override;
      auto rows = shuffledp::experiment::RunExperiment(cfg);
      std::printf("wrote %zu rows to %s/results.csv\n", rows.size(),
                  cfg.out_dir.c_str());
      return 0;
    }

    if (!preset_name.empty()) {
      auto preset = shuffledp::experiment::FindPreset(preset_name);
      if (!preset) {
        std::fprintf(stderr, "unknown preset '%s'\n", preset_name.c_str());
        return 2;
      }
      if (n == 0) n = preset->n;
      if (account->count("--delta") == 0) delta = preset->delta;
    }
    AmplificationMode mode = ParseMode(mode_name);

    if (eps_backstop && eps_fragment) {
      FragmentPlan plan{tau, *eps_backstop, *eps_fragment, tau};
      double linf = shuffledp::accounting::ReportFragLocal(plan).epsilon;
      plan.exposed = 1;
      double l1 = shuffledp::accounting::ReportFragLocal(plan).epsilon;
      std::printf("epsilon_linf = %.6g\nepsilon_l1 = %.6g\n", linf, l1);
      if (n > 0) {
        FragmentPlan full{tau, *eps_backstop, *eps_fragment, tau};
        try {
          CentralGuarantee c =
              shuffledp::accounting::ReportFragCentral(full, n, delta);
          std::printf("epsilon_central(fragment bound) = %.6g (delta = %g)\n",
                      c.epsilon, c.delta);
        } catch (const std::exception& e) {
          std::printf("fragment bound inapplicable: %s\n", e.what());
        }
        CentralGuarantee backstop = shuffledp::accounting::Amplify(
            AmplificationQuery{*eps_backstop, n, delta}, mode);
        std::printf("epsilon_central(backstop, %s) = %.6g\n",
                    mode_name.c_str(), backstop.epsilon);
      }
      return 0;
    }

    if (eps_local) {
      if (n == 0) {
        std::fprintf(stderr, "--n (or --preset) is required\n");
        return 2;
      }
      CentralGuarantee c = shuffledp::accounting::Amplify(
          AmplificationQuery{*eps_local, n, delta}, mode);
      std::printf("epsilon_central = %.9g (delta = %g, n = %llu, %s)\n",
                  c.epsilon, c.delta, static_cast<unsigned long long>(n),
                  mode_name.c_str());
      return 0;
    }
    if (eps_central) {
      if (n == 0) {
        std::fprintf(stderr, "--n (or --preset) is required\n");
        return 2;
      }
      auto local = shuffledp::accounting::SolveLocalForCentral(
          CentralGuarantee{*eps_central, delta}, n, mode);
      std::printf("epsilon_local = %.9g (removal model)\n", local.epsilon);
      return 0;
    }
    std::fprintf(stderr,
                 "account needs --epsilon-local, --epsilon-central, or a "
                 "--epsilon-backstop/--epsilon-fragment pair\n");
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
