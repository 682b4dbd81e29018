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

#ifndef CMG_GAMES_H_
#define CMG_GAMES_H_

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cmg/game_model.h"
#include "cmg/utility.h"
#include "json.hpp"

namespace cmg {

struct Game {
  GameModel model;
  UtilitySpec spec;
};

inline constexpr double kDefaultDummyPenalty = 1.5;

// 4x4 stage payoff for the player choosing the row, actions
// {rock, paper, scissors, dummy}. Antisymmetric.
Eigen::Matrix4d RpsdPayoff(double dummy_penalty);

// Iterated rock-paper-scissors-dummy: the state is the previous joint action
// (16 states, index 4a + b), transitions are deterministic and rho is
// uniform. F pays the max player the stage payoff of its action b against
// the min player's a.
Game BuildIteratedRpsd(double gamma, double dummy_penalty = kDefaultDummyPenalty);

// Single state; the min player picks rows, so U(x, y) = x^T M y.
Game BuildMatrixGame(const Eigen::MatrixXd& payoff, double gamma);

// kernel[s][b][s'] for the max player's MDP; the min player gets a single
// action. F = entropy of lambda_2.
Game BuildEntropyCmdp(const std::vector<std::vector<std::vector<double>>>& kernel,
                      const Eigen::VectorXd& rho, double gamma);

// {"name": "iterated_rpsd" | "matrix_game" | "entropy_cmdp",
//  "gamma": 0.9, "params": {...}}
Game GameFromJson(const nlohmann::json& recipe);

}  // namespace cmg

#endif  // CMG_GAMES_H_
