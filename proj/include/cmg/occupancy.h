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

#ifndef CMG_OCCUPANCY_H_
#define CMG_OCCUPANCY_H_

#include <vector>

#include <Eigen/Dense>

#include "cmg/game_model.h"
#include "json.hpp"

namespace cmg {

// Two visitation conventions coexist. kNormalized sums from h = 0 and carries
// the (1 - gamma) prefactor, so the joint is a probability distribution.
// kTruncated sums gamma^h from h = 1 to H with no prefactor; this is what the
// trajectory estimators target.
enum class OccupancyConvention { kNormalized, kTruncated };

struct OccupancyMeasure {
  int n_states = 0;
  int n_actions_min = 0;
  int n_actions_max = 0;
  std::vector<double> joint;       // (s, a, b), b fastest.
  Eigen::MatrixXd marginal_min;    // |S| x |A|
  Eigen::MatrixXd marginal_max;    // |S| x |B|
  Eigen::VectorXd state;           // sum over (a, b)
  double discount = 0.0;
  OccupancyConvention convention = OccupancyConvention::kNormalized;

  double joint_at(int s, int a, int b) const {
    return joint[(static_cast<size_t>(s) * n_actions_min + a) * n_actions_max +
                 b];
  }
  const Eigen::MatrixXd& marginal(Side side) const {
    return side == Side::kMin ? marginal_min : marginal_max;
  }

  // Builds the measure from a joint tensor, computing all marginals.
  static OccupancyMeasure FromJoint(int n_states, int n_actions_min,
                                    int n_actions_max,
                                    std::vector<double> joint, double discount,
                                    OccupancyConvention convention);
};

// Product form lambda(s, a, b) = state(s) x(a|s) y(b|s).
OccupancyMeasure ProductOccupancy(const Eigen::VectorXd& state,
                                  const PolicyPair& pair, double discount,
                                  OccupancyConvention convention);

// Discounted state distribution d solving (I - gamma P^T) d = (1 - gamma) rho.
Eigen::VectorXd StateOccupancy(const GameModel& model, const PolicyPair& pair);

// Exact normalized occupancy of the policies as supplied (no exploration is
// applied here; pass Played(pair) for epsilon-greedy play).
OccupancyMeasure ExactOccupancy(const GameModel& model, const PolicyPair& pair);

// sum_{h=1}^{H} gamma^h Pr(s_h = s, a_h = a, b_h = b), no prefactor.
OccupancyMeasure TruncatedOccupancy(const GameModel& model,
                                    const PolicyPair& pair, int horizon);

// (1 - gamma) * (h = 0 term + truncated); converges to ExactOccupancy as H
// grows.
OccupancyMeasure NormalizeTruncated(const OccupancyMeasure& truncated,
                                    const GameModel& model,
                                    const PolicyPair& pair);

// d lambda_side(s, a) / d policy_side(a'|s'), rows (s, a) and columns
// (s', a') both flattened row-major. The opponent's policy is held fixed.
Eigen::MatrixXd OccupancyJacobian(const GameModel& model,
                                  const PolicyPair& pair, Side side);

// Central finite-difference version of OccupancyJacobian.
Eigen::MatrixXd OccupancyJacobianFiniteDiff(const GameModel& model,
                                            const PolicyPair& pair, Side side,
                                            double step = 1e-5);

// Normalizes each state's marginal mass back into a policy.
PolicyPair RecoverPolicy(const OccupancyMeasure& occ);

struct OccupancyConstants {
  double lip_lambda = 0.0;
  double smooth_lambda = 0.0;
  double lip_lambda_inverse = 0.0;
};

OccupancyConstants ComputeOccupancyConstants(const GameModel& model);

nlohmann::json OccupancyToJson(const OccupancyMeasure& occ);

}  // namespace cmg

#endif  // CMG_OCCUPANCY_H_
