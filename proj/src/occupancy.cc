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

#include "cmg/occupancy.h"

#include <cmath>

#include "cmg/errors.h"

namespace cmg {
namespace {

// Opponent-averaged next-state distribution for one player's action:
// P_opp(s' | s, a) where the opponent's policy is marginalized out.
Eigen::VectorXd AveragedSlice(const GameModel& model, const PolicyPair& pair,
                              Side side, int s, int action) {
  const int S = model.n_states();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(S);
  const int n_opp = model.n_actions(Opponent(side));
  const Policy& opp = pair.policy(Opponent(side));
  for (int o = 0; o < n_opp; ++o) {
    const double w = opp(s, o);
    if (w == 0.0) continue;
    const double* row = side == Side::kMin ? model.Slice(s, action, o)
                                           : model.Slice(s, o, action);
    for (int next = 0; next < S; ++next) out(next) += w * row[next];
  }
  return out;
}

}  // namespace

OccupancyMeasure OccupancyMeasure::FromJoint(int n_states, int n_actions_min,
                                             int n_actions_max,
                                             std::vector<double> joint,
                                             double discount,
                                             OccupancyConvention convention) {
  OccupancyMeasure occ;
  occ.n_states = n_states;
  occ.n_actions_min = n_actions_min;
  occ.n_actions_max = n_actions_max;
  occ.joint = std::move(joint);
  occ.discount = discount;
  occ.convention = convention;
  occ.marginal_min = Eigen::MatrixXd::Zero(n_states, n_actions_min);
  occ.marginal_max = Eigen::MatrixXd::Zero(n_states, n_actions_max);
  occ.state = Eigen::VectorXd::Zero(n_states);
  size_t k = 0;
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions_min; ++a) {
      for (int b = 0; b < n_actions_max; ++b, ++k) {
        occ.marginal_min(s, a) += occ.joint[k];
        occ.marginal_max(s, b) += occ.joint[k];
      }
    }
    occ.state(s) = occ.marginal_min.row(s).sum();
  }
  return occ;
}

OccupancyMeasure ProductOccupancy(const Eigen::VectorXd& state,
                                  const PolicyPair& pair, double discount,
                                  OccupancyConvention convention) {
  const int S = static_cast<int>(state.size());
  const int A = pair.min_policy.n_actions();
  const int B = pair.max_policy.n_actions();
  std::vector<double> joint(static_cast<size_t>(S) * A * B);
  size_t k = 0;
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const double da = state(s) * pair.min_policy(s, a);
      for (int b = 0; b < B; ++b, ++k) joint[k] = da * pair.max_policy(s, b);
    }
  }
  return OccupancyMeasure::FromJoint(S, A, B, std::move(joint), discount,
                                     convention);
}

Eigen::VectorXd StateOccupancy(const GameModel& model, const PolicyPair& pair) {
  const int S = model.n_states();
  const double gamma = model.discount();
  const Eigen::MatrixXd P = InducedTransition(model, pair);
  const Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(S, S) - gamma * P.transpose();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  Eigen::VectorXd d = lu.solve((1.0 - gamma) * model.initial_dist());
  if (!d.allFinite()) {
    throw InternalError("exact_occupancy: singular flow system");
  }
  return d;
}

OccupancyMeasure ExactOccupancy(const GameModel& model,
                                const PolicyPair& pair) {
  return ProductOccupancy(StateOccupancy(model, pair), pair, model.discount(),
                          OccupancyConvention::kNormalized);
}

OccupancyMeasure TruncatedOccupancy(const GameModel& model,
                                    const PolicyPair& pair, int horizon) {
  if (horizon <= 0) {
    throw ParameterError("truncated_occupancy: horizon must be >= 1");
  }
  const double gamma = model.discount();
  const Eigen::MatrixXd Pt = InducedTransition(model, pair).transpose();
  Eigen::VectorXd dist = model.initial_dist();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(model.n_states());
  double weight = 1.0;
  for (int h = 1; h <= horizon; ++h) {
    dist = Pt * dist;
    weight *= gamma;
    acc += weight * dist;
  }
  return ProductOccupancy(acc, pair, gamma, OccupancyConvention::kTruncated);
}

OccupancyMeasure NormalizeTruncated(const OccupancyMeasure& truncated,
                                    const GameModel& model,
                                    const PolicyPair& pair) {
  if (truncated.convention != OccupancyConvention::kTruncated) {
    throw ParameterError("normalize_truncated: input is already normalized");
  }
  const OccupancyMeasure first =
      ProductOccupancy(model.initial_dist(), pair, model.discount(),
                       OccupancyConvention::kNormalized);
  const double scale = 1.0 - model.discount();
  std::vector<double> joint(truncated.joint.size());
  for (size_t k = 0; k < joint.size(); ++k) {
    joint[k] = scale * (first.joint[k] + truncated.joint[k]);
  }
  return OccupancyMeasure::FromJoint(truncated.n_states,
                                     truncated.n_actions_min,
                                     truncated.n_actions_max, std::move(joint),
                                     truncated.discount,
                                     OccupancyConvention::kNormalized);
}

Eigen::MatrixXd OccupancyJacobian(const GameModel& model,
                                  const PolicyPair& pair, Side side) {
  CheckDimensions(model, pair);
  const int S = model.n_states();
  const int n = model.n_actions(side);
  const double gamma = model.discount();
  const Policy& own = pair.policy(side);
  const Eigen::MatrixXd P = InducedTransition(model, pair);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(S, S) -
                                          gamma * P.transpose());
  const Eigen::VectorXd d = lu.solve((1.0 - gamma) * model.initial_dist());

  // Column (s', a') of rhs is gamma * d(s') * P_opp(. | s', a').
  Eigen::MatrixXd rhs(S, S * n);
  for (int sp = 0; sp < S; ++sp) {
    for (int ap = 0; ap < n; ++ap) {
      rhs.col(sp * n + ap) =
          gamma * d(sp) * AveragedSlice(model, pair, side, sp, ap);
    }
  }
  const Eigen::MatrixXd dd = lu.solve(rhs);  // d d(s) / d policy(a'|s')

  Eigen::MatrixXd jac(S * n, S * n);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < n; ++a) {
      jac.row(s * n + a) = own(s, a) * dd.row(s);
      jac(s * n + a, s * n + a) += d(s);
    }
  }
  return jac;
}

Eigen::MatrixXd OccupancyJacobianFiniteDiff(const GameModel& model,
                                            const PolicyPair& pair, Side side,
                                            double step) {
  const int S = model.n_states();
  const int n = model.n_actions(side);
  Eigen::MatrixXd jac(S * n, S * n);
  for (int sp = 0; sp < S; ++sp) {
    for (int ap = 0; ap < n; ++ap) {
      PolicyPair plus = pair;
      PolicyPair minus = pair;
      plus.policy(side).table(sp, ap) += step;
      minus.policy(side).table(sp, ap) -= step;
      const Eigen::VectorXd lp =
          Flatten(ExactOccupancy(model, plus).marginal(side));
      const Eigen::VectorXd lm =
          Flatten(ExactOccupancy(model, minus).marginal(side));
      jac.col(sp * n + ap) = (lp - lm) / (2.0 * step);
    }
  }
  return jac;
}

PolicyPair RecoverPolicy(const OccupancyMeasure& occ) {
  PolicyPair pair;
  pair.min_policy.table = occ.marginal_min;
  pair.max_policy.table = occ.marginal_max;
  for (int s = 0; s < occ.n_states; ++s) {
    const double mass_min = occ.marginal_min.row(s).sum();
    const double mass_max = occ.marginal_max.row(s).sum();
    if (!(mass_min > 0.0) || !(mass_max > 0.0)) {
      throw PreconditionError("recover_policy: state has zero occupancy mass");
    }
    pair.min_policy.table.row(s) /= mass_min;
    pair.max_policy.table.row(s) /= mass_max;
  }
  return pair;
}

OccupancyConstants ComputeOccupancyConstants(const GameModel& model) {
  const double gamma = model.discount();
  const double root_s = std::sqrt(static_cast<double>(model.n_states()));
  const double width = model.n_actions_min() + model.n_actions_max();
  const double one_minus = 1.0 - gamma;
  OccupancyConstants c;
  c.lip_lambda = root_s * width / (one_minus * one_minus);
  c.smooth_lambda =
      2.0 * gamma * root_s * std::pow(width, 1.5) / std::pow(one_minus, 3);
  c.lip_lambda_inverse = 2.0 / (model.min_initial_mass() * one_minus);
  return c;
}

nlohmann::json OccupancyToJson(const OccupancyMeasure& occ) {
  nlohmann::json joint = nlohmann::json::array();
  for (int s = 0; s < occ.n_states; ++s) {
    nlohmann::json by_a = nlohmann::json::array();
    for (int a = 0; a < occ.n_actions_min; ++a) {
      std::vector<double> row(occ.n_actions_max);
      for (int b = 0; b < occ.n_actions_max; ++b) row[b] = occ.joint_at(s, a, b);
      by_a.push_back(std::move(row));
    }
    joint.push_back(std::move(by_a));
  }
  return {{"joint", std::move(joint)}, {"gamma", occ.discount}};
}

}  // namespace cmg
