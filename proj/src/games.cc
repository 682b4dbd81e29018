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

#include "cmg/games.h"

#include <cmath>

#include "cmg/errors.h"

namespace cmg {
namespace {

void CheckGamma(double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ParameterError("games: gamma must lie in [0, 1)");
  }
}

}  // namespace

Eigen::Matrix4d RpsdPayoff(double dummy_penalty) {
  if (!(dummy_penalty > 0.0) || !std::isfinite(dummy_penalty)) {
    throw ParameterError("iterated_rpsd: dummy_penalty must be > 0");
  }
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  // Paper beats rock, scissors beats paper, rock beats scissors.
  m(1, 0) = 1.0;
  m(2, 1) = 1.0;
  m(0, 2) = 1.0;
  m(0, 1) = m(1, 2) = m(2, 0) = -1.0;
  for (int j = 0; j < 4; ++j) {
    m(3, j) = -dummy_penalty;
    if (j != 3) m(j, 3) = dummy_penalty;
  }
  // The dummy-vs-dummy entry is the only non-antisymmetric one.
  return 0.5 * (m - m.transpose());
}

Game BuildIteratedRpsd(double gamma, double dummy_penalty) {
  CheckGamma(gamma);
  const Eigen::Matrix4d pay = RpsdPayoff(dummy_penalty);
  constexpr int kS = 16, kA = 4;
  std::vector<double> kernel(static_cast<size_t>(kS) * kA * kA * kS, 0.0);
  std::vector<double> reward(static_cast<size_t>(kS) * kA * kA);
  for (int s = 0; s < kS; ++s) {
    for (int a = 0; a < kA; ++a) {
      for (int b = 0; b < kA; ++b) {
        const size_t sab = (static_cast<size_t>(s) * kA + a) * kA + b;
        kernel[sab * kS + (a * kA + b)] = 1.0;
        reward[sab] = pay(b, a);
      }
    }
  }
  GameModel model(kS, kA, kA, std::move(kernel),
                  Eigen::VectorXd::Constant(kS, 1.0 / kS), gamma);
  return {std::move(model),
          UtilitySpec::Linear(TermSide::kJoint, std::move(reward))};
}

Game BuildMatrixGame(const Eigen::MatrixXd& payoff, double gamma) {
  CheckGamma(gamma);
  if (payoff.size() == 0 || !payoff.allFinite()) {
    throw ParameterError("matrix_game: payoff must be non-empty and finite");
  }
  const int A = static_cast<int>(payoff.rows());
  const int B = static_cast<int>(payoff.cols());
  std::vector<double> reward(static_cast<size_t>(A) * B);
  for (int a = 0; a < A; ++a) {
    for (int b = 0; b < B; ++b) reward[a * B + b] = payoff(a, b);
  }
  GameModel model(1, A, B, std::vector<double>(static_cast<size_t>(A) * B, 1.0),
                  Eigen::VectorXd::Ones(1), gamma);
  return {std::move(model),
          UtilitySpec::Linear(TermSide::kJoint, std::move(reward))};
}

Game BuildEntropyCmdp(
    const std::vector<std::vector<std::vector<double>>>& kernel,
    const Eigen::VectorXd& rho, double gamma) {
  CheckGamma(gamma);
  const int S = static_cast<int>(kernel.size());
  if (S == 0 || rho.size() != S) {
    throw ParameterError("entropy_cmdp: kernel and rho sizes disagree");
  }
  const int B = static_cast<int>(kernel[0].size());
  if (B == 0) throw ParameterError("entropy_cmdp: no actions");
  std::vector<double> flat;
  flat.reserve(static_cast<size_t>(S) * B * S);
  for (int s = 0; s < S; ++s) {
    if (static_cast<int>(kernel[s].size()) != B) {
      throw ParameterError("entropy_cmdp: ragged action dimension");
    }
    for (int b = 0; b < B; ++b) {
      if (static_cast<int>(kernel[s][b].size()) != S) {
        throw ParameterError("entropy_cmdp: ragged next-state dimension");
      }
      flat.insert(flat.end(), kernel[s][b].begin(), kernel[s][b].end());
    }
  }
  GameModel model(S, 1, B, std::move(flat), rho, gamma);
  const ValidationReport report = ValidateModel(model);
  if (!report.empty()) {
    throw ParameterError("entropy_cmdp: " + report[0].message);
  }
  return {std::move(model), UtilitySpec::Entropy(Side::kMax, 1.0)};
}

Game GameFromJson(const nlohmann::json& recipe) {
  if (!recipe.is_object() || !recipe.contains("name")) {
    throw ConfigError("game.name: missing");
  }
  try {
    const std::string name = recipe.at("name").get<std::string>();
    const double gamma = recipe.value("gamma", 0.9);
    const nlohmann::json params =
        recipe.value("params", nlohmann::json::object());
    if (name == "iterated_rpsd") {
      return BuildIteratedRpsd(
          gamma, params.value("dummy_penalty", kDefaultDummyPenalty));
    }
    if (name == "matrix_game") {
      if (!params.contains("payoff")) {
        throw ConfigError("game.params.payoff: missing");
      }
      const auto rows =
          params.at("payoff").get<std::vector<std::vector<double>>>();
      if (rows.empty()) throw ConfigError("game.params.payoff: empty");
      Eigen::MatrixXd m(rows.size(), rows[0].size());
      for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size()) {
          throw ConfigError("game.params.payoff: ragged rows");
        }
        for (size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
      }
      return BuildMatrixGame(m, gamma);
    }
    if (name == "entropy_cmdp") {
      if (!params.contains("kernel") || !params.contains("rho")) {
        throw ConfigError("game.params: entropy_cmdp needs kernel and rho");
      }
      const auto kernel = params.at("kernel")
                              .get<std::vector<std::vector<std::vector<double>>>>();
      const auto rho = params.at("rho").get<std::vector<double>>();
      return BuildEntropyCmdp(
          kernel, Eigen::Map<const Eigen::VectorXd>(rho.data(), rho.size()),
          gamma);
    }
    throw ConfigError("game.name: unknown game '" + name + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("game: ") + e.what());
  }
}

}  // namespace cmg
