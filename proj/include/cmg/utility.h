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

#ifndef CMG_UTILITY_H_
#define CMG_UTILITY_H_

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cmg/game_model.h"
#include "cmg/occupancy.h"
#include "json.hpp"

namespace cmg {

enum class TermKind { kLinear, kNegSqNorm, kEntropy, kSum };

// kJoint is only meaningful for linear rewards over (s, a, b).
enum class TermSide { kMin, kMax, kJoint };

inline constexpr double kEntropyFloor = 1e-8;

// A built-in concave-family utility F over occupancy measures. Terms are
// literal contributions to F, the single zero-sum game utility: the max
// player ascends F and the min player descends it. A concave term for the
// min player therefore carries a negative weight.
//
//   linear       weight * <reward, lambda_side>
//   neg_sq_norm  -(weight / 2) * ||lambda_side||^2
//   entropy      weight * sum -lambda log lambda   (0 log 0 = 0)
//   sum          weight * sum of child terms
struct UtilitySpec {
  TermKind kind = TermKind::kSum;
  TermSide side = TermSide::kMax;
  double weight = 1.0;
  std::vector<double> reward;
  std::vector<UtilitySpec> terms;

  static UtilitySpec Linear(TermSide side, std::vector<double> reward,
                            double weight = 1.0);
  static UtilitySpec NegSqNorm(Side side, double weight);
  static UtilitySpec Entropy(Side side, double weight);
  static UtilitySpec Sum(std::vector<UtilitySpec> terms, double weight = 1.0);
  static UtilitySpec Zero() { return Sum({}); }

  double Value(const OccupancyMeasure& occ) const;

  // Total derivative of F with respect to each joint entry lambda(s, a, b);
  // marginal terms contribute through lambda_1(s, a) = sum_b lambda(s, a, b)
  // and lambda_2(s, b) = sum_a lambda(s, a, b). Entropy uses the clamp floor.
  std::vector<double> JointGradient(const OccupancyMeasure& occ) const;

  // L_F and l_F bounds for the built-in family on a game of these dimensions.
  double LipF(int n_states, int n_actions_min, int n_actions_max) const;
  double SmoothF() const;

  // Strong concavity of F in lambda_2 (max) and strong convexity in lambda_1
  // (min, taken from negatively weighted curvature terms). Both >= 0.
  double StrongConcavity(Side side) const;

  // Throws ParameterError when reward sizes do not match the dimensions.
  void CheckDimensions(int n_states, int n_actions_min,
                       int n_actions_max) const;

  bool IsLinear() const;
};

// Pseudo-reward z over (s, a) for the min side (or (s, b) for max) obtained
// from a joint gradient by averaging over the opponent's played policy:
// z(s, a) = sum_b y(b|s) G(s, a, b).
Eigen::MatrixXd SideReward(const std::vector<double>& joint_gradient,
                           const Policy& opponent, Side side, int n_states,
                           int n_actions_min, int n_actions_max);

// U(x, y) = F(lambda(x, y)), policies used as supplied.
double EvalUtility(const GameModel& model, const UtilitySpec& spec,
                   const PolicyPair& pair);

// U^mu(x, y) = U(x, y) - (mu / 2) ||lambda_2(x, y)||^2.
double EvalUtilityReg(const GameModel& model, const UtilitySpec& spec,
                      const PolicyPair& pair, double mu_reg);

// Gradient of U^mu with respect to one player's policy table, using the
// adjoint (vector-Jacobian) form of the occupancy chain rule.
Eigen::MatrixXd ExactGrad(const GameModel& model, const UtilitySpec& spec,
                          const PolicyPair& pair, Side side, double mu_reg);

// Same gradient assembled as J^T z from the explicit occupancy Jacobian.
Eigen::MatrixXd ExactGradViaJacobian(const GameModel& model,
                                     const UtilitySpec& spec,
                                     const PolicyPair& pair, Side side,
                                     double mu_reg);

Eigen::MatrixXd ExactGradFiniteDiff(const GameModel& model,
                                    const UtilitySpec& spec,
                                    const PolicyPair& pair, Side side,
                                    double mu_reg, double step = 1e-5);

// mu_reg * L_lambda: bound on ||grad_x U - grad_x U^mu||.
double RegularizerBiasBound(const GameModel& model, double mu_reg);

enum class ConcavityRegime { kConcave, kStronglyConcave };

struct ModuliReport {
  ConcavityRegime regime = ConcavityRegime::kConcave;
  double mu = 0.0;         // strong concavity used for the maximizer
  double lip_F = 0.0;      // effective L_F (regularizer included when used)
  double smooth_F = 0.0;   // effective l_F
  double lip_U = 0.0;
  double smooth_U = 0.0;
  double lip_U_reg = 0.0;     // L_U^mu (concave regime only)
  double smooth_U_reg = 0.0;  // l_U^mu (concave regime only)
  double mu_qg = 0.0;
  double mu_pl = 0.0;
  double kappa = 0.0;
  double lip_maximizer = 0.0;  // L_*
  double smooth_phi = 0.0;     // l_Phi = l (1 + L_*)
  double lip_phi = 0.0;
  double smooth = 0.0;         // the l the tunings consume
  double mu_qg_min = 0.0;      // min player's moduli (strongly concave regime)
  double mu_pl_min = 0.0;
  double grad_dominance = 0.0;  // (1 - gamma) min rho / (2 sqrt 2)
  double entropy_clamp = kEntropyFloor;
};

ModuliReport ComputeModuli(const GameModel& model, const UtilitySpec& spec,
                           double mu_reg, ConcavityRegime regime);

double GradientDominanceModulus(const GameModel& model);

// Modulus conversions for an l-smooth (mu_c, mu_h)-hidden strongly convex
// function.
double PplFromHiddenStrongConvexity(double smooth, double mu_c, double mu_h);
double QgFromHiddenStrongConvexity(double mu_c, double mu_h);
double QgFromPpl(double mu_pl);

nlohmann::json UtilityToJson(const UtilitySpec& spec);
UtilitySpec UtilityFromJson(const nlohmann::json& doc);

std::string RegimeName(ConcavityRegime regime);

}  // namespace cmg

#endif  // CMG_UTILITY_H_
