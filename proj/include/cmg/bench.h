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

#ifndef CMG_BENCH_H_
#define CMG_BENCH_H_

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "cmg/cmg_solvers.h"
#include "cmg/games.h"
#include "json.hpp"

namespace cmg {

// Top-level keys: preset, game, solver, trials, mu_grid, output_path,
// master_seed, tune_epsilon. A preset supplies defaults that the remaining
// keys patch.
struct ExperimentConfig {
  std::string preset;
  nlohmann::json game;
  SolverConfig solver;
  int trials = 1;
  std::vector<double> mu_grid;
  std::string output_path = "out";
  uint64_t master_seed = 0;
  double tune_epsilon = 0.1;
};

std::vector<std::string> PresetNames();
nlohmann::json PresetJson(const std::string& name);

ExperimentConfig ExperimentFromJson(const nlohmann::json& doc);
nlohmann::json ExperimentToJson(const ExperimentConfig& config);
ExperimentConfig LoadExperiment(const std::string& path);

// Applies CMG_SOLVE_SEED when set; returns true if it did.
bool ApplySeedOverride(ExperimentConfig& config);

// Resolves the game and checks the model, the utility dimensions and the
// solver configuration. Throws ConfigError or ParameterError.
Game ResolveGame(const ExperimentConfig& config);

uint64_t TrialSeed(uint64_t master_seed, int trial);

struct TrialResult {
  int index = 0;  // file index: mu_index * trials + trial
  int trial = 0;
  double mu = 0.0;
  uint64_t seed = 0;
  SolverReport report;
};

struct ExperimentResult {
  std::vector<double> mus;
  std::vector<TrialResult> trials;
  bool all_completed = true;
};

ExperimentResult RunExperiment(const ExperimentConfig& config, int jobs);

// Writes trial_<i>.csv, aggregate.csv and summary.json under dir.
void WriteOutputs(const ExperimentConfig& config, const ExperimentResult& res,
                  const std::string& dir);

void WriteAggregateCsv(const ExperimentResult& res, std::ostream& out);
nlohmann::json ExperimentSummary(const ExperimentConfig& config,
                                 const ExperimentResult& res);

// Theory constants and step-size calculators for the configured game.
nlohmann::json TuneReport(const ExperimentConfig& config);
void PrintTuneReport(const nlohmann::json& report, std::ostream& out);

}  // namespace cmg

#endif  // CMG_BENCH_H_
