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

#ifndef CMG_CMG_SOLVERS_H_
#define CMG_CMG_SOLVERS_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cmg/game_model.h"
#include "cmg/minmax_opt.h"
#include "cmg/utility.h"
#include "json.hpp"

namespace cmg {

enum class Algorithm { kNestPg, kAltPgda };
enum class GradientMode { kExact, kStochastic };
// Which player's gradient uses U^mu. kPerPaper means the max (inner) player
// for Nest-PG and the min player for Alt-PGDA.
enum class RegularizedSide { kPerPaper, kBoth, kMinOnly, kMaxOnly };
enum class InitMode { kUniform, kDirichlet };

struct SolverConfig {
  Algorithm algorithm = Algorithm::kAltPgda;
  // Unset: 0.05 for merely concave specs, 0 when the max side is strongly
  // concave.
  std::optional<double> mu_reg;
  double tau_min = 0.1;
  double tau_max = 0.1;
  long long outer_iters = 1000;
  long long inner_iters = 10;
  int batch_min = 64;
  int batch_max = 64;
  int horizon = 32;
  double explore_min = 0.0;
  double explore_max = 0.0;
  GradientMode gradient_mode = GradientMode::kExact;
  RegularizedSide regularized_side = RegularizedSide::kPerPaper;
  uint64_t seed = 0;
  long long eval_cadence = 25;
  InitMode init = InitMode::kUniform;
  double br_tolerance = 1e-8;

  // Throws ParameterError on the first invalid field.
  void Validate() const;
  double EffectiveMu(const UtilitySpec& spec) const;
  // (mu applied to the min gradient, mu applied to the max gradient).
  std::pair<double, double> SideMus(const UtilitySpec& spec) const;
};

std::string AlgorithmName(Algorithm a);
Algorithm ParseAlgorithm(const std::string& name);
std::string RegularizedSideName(RegularizedSide r);
RegularizedSide ParseRegularizedSide(const std::string& name);

nlohmann::json SolverConfigToJson(const SolverConfig& c);
// Missing keys keep their defaults; unknown keys are rejected.
SolverConfig SolverConfigFromJson(const nlohmann::json& doc);

enum class BrCertificate { kExact, kHeuristic };
std::string CertificateName(BrCertificate c);

struct BestResponseOptions {
  double tolerance = 1e-8;
  // Respond to U^mu instead of U.
  double mu_reg = 0.0;
  int starts = 3;
  long long max_iters = 20000;
  uint64_t seed = 0;
};

struct BestResponse {
  double value = 0.0;
  Policy policy;
  BrCertificate certificate = BrCertificate::kHeuristic;
  // Bellman residual (exact path) or gradient-mapping norm (heuristic path).
  double residual = 0.0;
  long long iters = 0;
  bool converged = false;
};

// Best response of `side` against the opponent policy in `pair`. Linear specs
// without regularization are solved exactly by policy iteration and certified
// by the Bellman residual; everything else uses multi-start projected
// gradient ascent with backtracking.
BestResponse BestResponseValue(const GameModel& model, const UtilitySpec& spec,
                               const PolicyPair& pair, Side side,
                               const BestResponseOptions& opt = {});

struct Exploitability {
  double u_value = 0.0;
  double gap = 0.0;           // max_y' U(x, y') - min_x' U(x', y)
  double gap_min_side = 0.0;  // U(x, y) - min_x' U(x', y)
  double gap_max_side = 0.0;  // max_y' U(x, y') - U(x, y)
  BrCertificate certificate = BrCertificate::kExact;
  // Heuristic responses only bound the gap from below.
  bool lower_bound = false;
};

Exploitability ComputeExploitability(const GameModel& model,
                                     const UtilitySpec& spec,
                                     const PolicyPair& pair,
                                     double tolerance = 1e-8);

struct Checkpoint {
  long long iter = 0;
  Exploitability expl;
  double d_x_proxy = 0.0;
  double d_y_proxy = 0.0;
  Policy min_policy;
  Policy max_policy;
};

// Index of the minimal-exploitability checkpoint among those with iter >= 1
// (all of them when none qualifies); ties go to the later checkpoint.
int SelectBestIterate(const std::vector<Checkpoint>& checkpoints);

struct SolverReport {
  IterTrace trace;
  std::vector<Checkpoint> checkpoints;
  int best_index = 0;
  long long best_iter = 0;
  PolicyPair output;
  SolverConfig config;
  double mu_reg = 0.0;
  double wall_seconds = 0.0;

  // Header: iter,u_value,exploitability,gap_min_side,gap_max_side,
  // d_x_proxy,d_y_proxy,br_certificate
  void WriteCsv(std::ostream& out) const;
  nlohmann::json Summary() const;
};

extern const char kReportCsvHeader[];

// Initial profile for the configured init mode (Dirichlet(1) rows drawn from
// the config seed).
PolicyPair InitialPair(const GameModel& model, const SolverConfig& config);

// Gradient oracle over flattened policy tables, exact or REINFORCE-based.
OracleSpec MakeGameOracle(const GameModel& model, const UtilitySpec& spec,
                          const SolverConfig& config);

struct LocalModuli {
  double smooth = 0.0;  // max spectral norm of the tangent Hessian of U^mu
  double mu_min = 0.0;  // min curvature of x -> U^mu(x, y) along the simplex
  double mu_max = 0.0;  // min curvature of y -> -U^mu(x, y) along the simplex
  int samples = 0;
};

// Sampled finite-difference estimate of the curvature constants on interior
// policy pairs. A practical substitute for the worst-case moduli, which are
// too conservative to drive step sizes at desk scale.
LocalModuli EstimateLocalModuli(const GameModel& model, const UtilitySpec& spec,
                                double mu_reg, int samples, uint64_t seed);

SolverReport NestPg(const GameModel& model, const UtilitySpec& spec,
                    const SolverConfig& config);
SolverReport AltPgda(const GameModel& model, const UtilitySpec& spec,
                     const SolverConfig& config);
// Dispatches on config.algorithm.
SolverReport RunSolver(const GameModel& model, const UtilitySpec& spec,
                       const SolverConfig& config);

}  // namespace cmg

#endif  // CMG_CMG_SOLVERS_H_
