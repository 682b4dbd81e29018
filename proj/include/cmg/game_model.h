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

#ifndef CMG_GAME_MODEL_H_
#define CMG_GAME_MODEL_H_

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace cmg {

enum class Side { kMin, kMax };

inline Side Opponent(Side side) {
  return side == Side::kMin ? Side::kMax : Side::kMin;
}

// Tabular two-player zero-sum Markov game. The kernel is stored densely as
// P(s' | s, a, b) with s' varying fastest. Values are immutable after
// construction; use ValidateModel to check stochasticity.
class GameModel {
 public:
  GameModel(int n_states, int n_actions_min, int n_actions_max,
            std::vector<double> transition, Eigen::VectorXd initial_dist,
            double discount);

  int n_states() const { return n_states_; }
  int n_actions_min() const { return n_actions_min_; }
  int n_actions_max() const { return n_actions_max_; }
  int n_actions(Side side) const {
    return side == Side::kMin ? n_actions_min_ : n_actions_max_;
  }
  double discount() const { return discount_; }
  const Eigen::VectorXd& initial_dist() const { return initial_dist_; }
  const std::vector<double>& transition() const { return transition_; }

  double P(int s, int a, int b, int next) const {
    return transition_[Index(s, a, b) + next];
  }
  // Pointer to the |S| next-state probabilities of slice (s, a, b).
  const double* Slice(int s, int a, int b) const {
    return transition_.data() + Index(s, a, b);
  }

  double min_initial_mass() const { return initial_dist_.minCoeff(); }

 private:
  size_t Index(int s, int a, int b) const {
    return ((static_cast<size_t>(s) * n_actions_min_ + a) * n_actions_max_ +
            b) * n_states_;
  }

  int n_states_;
  int n_actions_min_;
  int n_actions_max_;
  std::vector<double> transition_;
  Eigen::VectorXd initial_dist_;
  double discount_;
};

struct Violation {
  std::string message;
  std::vector<int> index;  // (s), (s, a, b) or empty, depending on the check.
};
using ValidationReport = std::vector<Violation>;

inline constexpr double kInputStochasticTol = 1e-12;
inline constexpr double kDerivedStochasticTol = 1e-10;

ValidationReport ValidateModel(const GameModel& model);

// One probability row per state over that player's actions.
struct Policy {
  Eigen::MatrixXd table;

  int n_states() const { return static_cast<int>(table.rows()); }
  int n_actions() const { return static_cast<int>(table.cols()); }
  double operator()(int s, int a) const { return table(s, a); }

  static Policy Uniform(int n_states, int n_actions);
};

// Returns violations of row-stochasticity (each entry >= 0, rows sum to 1).
ValidationReport ValidatePolicy(const Policy& policy,
                                double tol = kInputStochasticTol);

struct PolicyPair {
  Policy min_policy;
  Policy max_policy;
  double explore_min = 0.0;
  double explore_max = 0.0;

  const Policy& policy(Side side) const {
    return side == Side::kMin ? min_policy : max_policy;
  }
  Policy& policy(Side side) {
    return side == Side::kMin ? min_policy : max_policy;
  }
  double explore(Side side) const {
    return side == Side::kMin ? explore_min : explore_max;
  }
};

// Checks that the pair's dimensions match the model.
void CheckDimensions(const GameModel& model, const PolicyPair& pair);

// (1 - epsilon) * x + epsilon / n_actions, row by row.
Policy EpsilonGreedy(const Policy& policy, double epsilon, int n_actions);

// The policies actually played: epsilon-greedy applied to both tables, with
// exploration parameters reset to zero.
PolicyPair Played(const PolicyPair& pair);

// State-to-state matrix P(x, y)(s, s') = sum_{a,b} x(a|s) y(b|s) P(s'|s,a,b).
Eigen::MatrixXd InducedTransition(const GameModel& model,
                                  const PolicyPair& pair);

// Euclidean projection of v onto the probability simplex (sort and threshold).
Eigen::VectorXd ProjectSimplex(const Eigen::VectorXd& v);

// Blockwise simplex projection of a flat vector.
Eigen::VectorXd ProjectSimplexProduct(const Eigen::VectorXd& point,
                                      std::span<const int> block_sizes);

// Row-wise simplex projection of a policy-shaped table.
Policy ProjectRows(const Eigen::MatrixXd& table);

// Flattening helpers between policy tables and row-major vectors.
Eigen::VectorXd Flatten(const Eigen::MatrixXd& table);
Eigen::MatrixXd Unflatten(const Eigen::VectorXd& flat, int rows, int cols);

// The same game with player roles exchanged: kernel indexed (s, b, a).
GameModel SwapRoles(const GameModel& model);

nlohmann::json ModelToJson(const GameModel& model);
GameModel ModelFromJson(const nlohmann::json& doc);
nlohmann::json PolicyToJson(const Policy& policy);

}  // namespace cmg

#endif  // CMG_GAME_MODEL_H_
