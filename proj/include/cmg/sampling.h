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

#ifndef CMG_SAMPLING_H_
#define CMG_SAMPLING_H_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cmg/game_model.h"
#include "cmg/occupancy.h"
#include "cmg/rng.h"
#include "cmg/utility.h"

namespace cmg {

struct Step {
  int state = 0;
  int action_min = 0;
  int action_max = 0;
};

// A rollout of horizon H holds the H + 1 visits h = 0..H. The gradient
// estimator reads h < H and the occupancy estimator reads 1 <= h <= H.
struct Trajectory {
  std::vector<Step> steps;
  uint64_t seed_tag = 0;

  int horizon() const { return static_cast<int>(steps.size()) - 1; }
};

// Samples rollouts under a fixed played policy pair. Construction caches
// row-major copies of the played tables.
class TrajectorySampler {
 public:
  TrajectorySampler(const GameModel& model, const PolicyPair& played);

  Trajectory Sample(int horizon, RngStream& rng) const;

 private:
  const GameModel& model_;
  int n_min_;
  int n_max_;
  std::vector<double> min_rows_;
  std::vector<double> max_rows_;
  std::vector<double> rho_;
};

Trajectory SampleTrajectory(const GameModel& model, const PolicyPair& played,
                            int horizon, RngStream& rng);

// Batch mean of per-rollout visitation sums. kTruncated sums gamma^h over
// h = 1..H with no prefactor; kNormalized sums (1 - gamma) gamma^h over
// h = 0..H and estimates the exact measure.
OccupancyMeasure EstimateOccupancy(
    const std::vector<Trajectory>& trajectories, int n_states,
    int n_actions_min, int n_actions_max, double discount,
    OccupancyConvention convention = OccupancyConvention::kTruncated);

// z for one player: the utility gradient at the estimate, averaged over the
// opponent's played policy. mu_reg adds the -(mu/2)||lambda_2||^2 term.
Eigen::MatrixXd PseudoReward(const UtilitySpec& spec,
                             const OccupancyMeasure& lambda_hat,
                             const Policy& opponent_played, Side side,
                             double mu_reg = 0.0);

// sum_{h<H} gamma^h z(s_h, a_h) sum_{h'<=h} d/dx log pi_x(a_h'|s_h'), with
// pi_x = (1 - epsilon) x + epsilon / n. Uses the first `horizon` visits.
Eigen::MatrixXd ReinforceGrad(const Trajectory& trajectory, Side side,
                              const Policy& param, double epsilon,
                              const Eigen::MatrixXd& z, double discount,
                              int horizon);

struct BatchConfig {
  int batch_size = 1;
  int horizon = 1;
  uint64_t seed = 0;
  uint64_t iteration = 0;
  // Scale the estimate by (1 - gamma) and plug the normalized occupancy
  // estimate into the pseudo-reward, matching ExactGrad's units.
  bool normalized = false;
  double mu_reg = 0.0;
};

struct GradEstimate {
  Eigen::MatrixXd gradient;
  Eigen::MatrixXd pseudo_reward;
  int batch_size = 0;
  int horizon = 0;
  // Mean of ||g_i||^2 over the per-rollout estimates.
  double empirical_second_moment = 0.0;
  // Per-entry sample variance of the per-rollout estimates (zero when M = 1).
  Eigen::MatrixXd sample_variance;
};

// Two-phase estimate: M rollouts form lambda_hat and z, then M fresh rollouts
// are averaged. Rollout k of phase p uses stream (seed, iteration, index)
// with a disjoint index per (side, phase, k). The first phase is skipped when
// z does not depend on the occupancy.
GradEstimate BatchGrad(const GameModel& model, const UtilitySpec& spec,
                       const PolicyPair& pair, Side side,
                       const BatchConfig& config);

struct EstimatorBounds {
  double variance_bound = 0.0;
  double bias_bound = 0.0;
  bool bias_valid = true;
  std::string warning;
};

// 27 L_F^2 / (M (1-gamma)^6 eps^2) and
// 256 L_F / ((1-gamma)^6 eps^2) exp(-(1-gamma)(H-1)); the latter requires
// H > 1 / ln(1 / sqrt(gamma)).
EstimatorBounds ComputeEstimatorBounds(double lip_F, double discount,
                                       double epsilon, int batch_size,
                                       int horizon);

nlohmann::json TrajectoryToJson(const Trajectory& trajectory);

}  // namespace cmg

#endif  // CMG_SAMPLING_H_
