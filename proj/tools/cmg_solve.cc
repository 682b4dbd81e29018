// Copyright 2026 The cmg-solve Authors
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

// cmg-solve: experiment runner for convex Markov game solvers.

#include <chrono>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cmg/bench.h"
#include "cmg/errors.h"

namespace {

cmg::ExperimentConfig Load(const std::string& path) {
  cmg::ExperimentConfig config = cmg::LoadExperiment(path);
  if (cmg::ApplySeedOverride(config)) {
    std::cerr << "master_seed overridden by CMG_SOLVE_SEED: "
              << config.master_seed << "\n";
  }
  return config;
}

int Validate(const cmg::ExperimentConfig& config) {
  const cmg::Game g = cmg::ResolveGame(config);
  std::cout << "ok: " << config.game.value("name", "") << " with "
            << g.model.n_states() << " states, " << g.model.n_actions_min()
            << "x" << g.model.n_actions_max() << " actions, "
            << cmg::AlgorithmName(config.solver.algorithm) << ", "
            << config.trials << " trial(s) x "
            << std::max<size_t>(1, config.mu_grid.size()) << " mu value(s)\n";
  return 0;
}

int Run(const cmg::ExperimentConfig& config, int jobs,
        const std::string& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  const cmg::ExperimentResult res = cmg::RunExperiment(config, jobs);
  const std::string dir = out_dir.empty() ? config.output_path : out_dir;
  cmg::WriteOutputs(config, res, dir);
  const nlohmann::json summary = cmg::ExperimentSummary(config, res);
  for (const auto& row : summary.at("per_mu")) {
    std::fprintf(stderr,
                 "mu=%-8g trials=%d initial=%.6g final=%.6g (se %.3g) "
                 "converged=%.6g\n",
                 row.at("mu").get<double>(), row.at("n_trials").get<int>(),
                 row.at("initial_mean").get<double>(),
                 row.at("final_mean").get<double>(),
                 row.at("final_stderr").get<double>(),
                 row.at("converged_mean").get<double>());
  }
  const double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  std::fprintf(stderr, "wrote %zu trial files to %s in %.1fs\n",
               res.trials.size(), dir.c_str(), secs);
  if (!res.all_completed) {
    std::cerr << "error: at least one trial hit the divergence guard\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Solvers and experiments for zero-sum convex Markov games"};
  app.require_subcommand(1);

  std::string config_path;
  int jobs = 1;
  std::string out_dir;
  bool validate_only = false;
  bool as_json = false;

  CLI::App* run = app.add_subcommand("run", "Run a multi-trial experiment");
  run->add_option("--config", config_path, "Experiment JSON")->required();
  run->add_option("--jobs", jobs, "Concurrent trials")
      ->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Output directory (default: output_path)");
  run->add_flag("--validate-only", validate_only,
                "Check the config and exit without running");

  CLI::App* tune = app.add_subcommand("tune", "Print theory constants");
  tune->add_option("--config", config_path, "Experiment JSON")->required();
  tune->add_flag("--json", as_json, "Emit the report as JSON");

  CLI::App* validate = app.add_subcommand("validate", "Check a config");
  validate->add_option("--config", config_path, "Experiment JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const cmg::ExperimentConfig config = Load(config_path);
    if (*validate || (*run && validate_only)) return Validate(config);
    if (*tune) {
      const nlohmann::json report = cmg::TuneReport(config);
      if (as_json) {
        std::cout << report.dump(2) << "\n";
      } else {
        cmg::PrintTuneReport(report, std::cout);
      }
      return 0;
    }
    return Run(config, jobs, out_dir);
  } catch (const cmg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const cmg::ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
