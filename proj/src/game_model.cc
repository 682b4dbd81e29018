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

#include "cmg/game_model.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "cmg/errors.h"

namespace cmg {

GameModel::GameModel(int n_states, int n_actions_min, int n_actions_max,
                     std::vector<double> transition,
                     Eigen::VectorXd initial_dist, double discount)
    : n_states_(n_states),
      n_actions_min_(n_actions_min),
      n_actions_max_(n_actions_max),
      transition_(std::move(transition)),
      initial_dist_(std::move(initial_dist)),
      discount_(discount) {
  if (n_states <= 0 || n_actions_min <= 0 || n_actions_max <= 0) {
    throw ParameterError("GameModel: dimensions must be positive");
  }
  const size_t expected = static_cast<size_t>(n_states) * n_actions_min *
                          n_actions_max * n_states;
  if (transition_.size() != expected) {
    std::ostringstream msg;
    msg << "GameModel: transition has " << transition_.size()
        << " entries, expected " << expected;
    throw ParameterError(msg.str());
  }
  if (initial_dist_.size() != n_states) {
    throw ParameterError("GameModel: initial_dist length must be n_states");
  }
}

ValidationReport ValidateModel(const GameModel& model) {
  ValidationReport report;
  const int S = model.n_states();
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < model.n_actions_min(); ++a) {
      for (int b = 0; b < model.n_actions_max(); ++b) {
        const double* row = model.Slice(s, a, b);
        double total = 0.0;
        bool negative = false;
        for (int next = 0; next < S; ++next) {
          total += row[next];
          if (!(row[next] >= 0.0)) negative = true;
        }
        if (negative) {
          report.push_back({"transition slice has a negative or NaN entry",
                            {s, a, b}});
        }
        if (!(std::abs(total - 1.0) <= kInputStochasticTol)) {
          std::ostringstream msg;
          msg << "transition slice sums to " << total << " (expected 1)";
          report.push_back({msg.str(), {s, a, b}});
        }
      }
    }
  }
  const Eigen::VectorXd& rho = model.initial_dist();
  if (!(std::abs(rho.sum() - 1.0) <= kInputStochasticTol)) {
    std::ostringstream msg;
    msg << "initial distribution sums to " << rho.sum() << " (expected 1)";
    report.push_back({msg.str(), {}});
  }
  for (int s = 0; s < S; ++s) {
    if (!(rho(s) > 0.0)) {
      report.push_back(
          {"Assumption 1 violated: initial mass must be strictly positive",
           {s}});
    }
  }
  const double gamma = model.discount();
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    report.push_back({"discount must lie in [0, 1)", {}});
  }
  return report;
}

Policy Policy::Uniform(int n_states, int n_actions) {
  return Policy{Eigen::MatrixXd::Constant(n_states, n_actions,
                                          1.0 / n_actions)};
}

ValidationReport ValidatePolicy(const Policy& policy, double tol) {
  ValidationReport report;
  for (int s = 0; s < policy.n_states(); ++s) {
    const auto row = policy.table.row(s);
    if (!(row.minCoeff() >= 0.0)) {
      report.push_back({"policy row has a negative or NaN entry", {s}});
    }
    if (!(std::abs(row.sum() - 1.0) <= tol)) {
      report.push_back({"policy row does not sum to 1", {s}});
    }
  }
  return report;
}

void CheckDimensions(const GameModel& model, const PolicyPair& pair) {
  const int S = model.n_states();
  if (pair.min_policy.n_states() != S ||
      pair.min_policy.n_actions() != model.n_actions_min() ||
      pair.max_policy.n_states() != S ||
      pair.max_policy.n_actions() != model.n_actions_max()) {
    throw ParameterError("policy pair dimensions do not match the model");
  }
}

Policy EpsilonGreedy(const Policy& policy, double epsilon, int n_actions) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw ParameterError("epsilon_greedy: epsilon must lie in [0, 1)");
  }
  if (policy.n_actions() != n_actions) {
    throw ParameterError("epsilon_greedy: row length != n_actions");
  }
  Policy out = policy;
  out.table = (1.0 - epsilon) * policy.table.array() + epsilon / n_actions;
  return out;
}

PolicyPair Played(const PolicyPair& pair) {
  PolicyPair out;
  out.min_policy = EpsilonGreedy(pair.min_policy, pair.explore_min,
                                 pair.min_policy.n_actions());
  out.max_policy = EpsilonGreedy(pair.max_policy, pair.explore_max,
                                 pair.max_policy.n_actions());
  return out;
}

Eigen::MatrixXd InducedTransition(const GameModel& model,
                                  const PolicyPair& pair) {
  CheckDimensions(model, pair);
  const int S = model.n_states();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(S, S);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < model.n_actions_min(); ++a) {
      const double xa = pair.min_policy(s, a);
      if (xa == 0.0) continue;
      for (int b = 0; b < model.n_actions_max(); ++b) {
        const double w = xa * pair.max_policy(s, b);
        if (w == 0.0) continue;
        const double* row = model.Slice(s, a, b);
        for (int next = 0; next < S; ++next) P(s, next) += w * row[next];
      }
    }
  }
  return P;
}

Eigen::VectorXd ProjectSimplex(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  if (n == 0) throw ParameterError("project_simplex: empty block");
  std::vector<double> sorted(v.data(), v.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cumsum += sorted[k];
    const double candidate = (cumsum - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) theta = candidate;
  }
  return (v.array() - theta).max(0.0).matrix();
}

Eigen::VectorXd ProjectSimplexProduct(const Eigen::VectorXd& point,
                                      std::span<const int> block_sizes) {
  Eigen::Index total = 0;
  for (int size : block_sizes) {
    if (size < 1) throw ParameterError("project_simplex_product: empty block");
    total += size;
  }
  if (total != point.size()) {
    throw ParameterError("project_simplex_product: block sizes do not cover "
                         "the point");
  }
  Eigen::VectorXd out(point.size());
  Eigen::Index offset = 0;
  for (int size : block_sizes) {
    out.segment(offset, size) = ProjectSimplex(point.segment(offset, size));
    offset += size;
  }
  return out;
}

Policy ProjectRows(const Eigen::MatrixXd& table) {
  Policy out{Eigen::MatrixXd(table.rows(), table.cols())};
  for (Eigen::Index s = 0; s < table.rows(); ++s) {
    out.table.row(s) = ProjectSimplex(table.row(s).transpose()).transpose();
  }
  return out;
}

Eigen::VectorXd Flatten(const Eigen::MatrixXd& table) {
  Eigen::VectorXd flat(table.size());
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.cols(); ++c) {
      flat(r * table.cols() + c) = table(r, c);
    }
  }
  return flat;
}

Eigen::MatrixXd Unflatten(const Eigen::VectorXd& flat, int rows, int cols) {
  if (flat.size() != static_cast<Eigen::Index>(rows) * cols) {
    throw ParameterError("unflatten: size mismatch");
  }
  Eigen::MatrixXd table(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) table(r, c) = flat(r * cols + c);
  }
  return table;
}

GameModel SwapRoles(const GameModel& model) {
  const int S = model.n_states();
  const int A = model.n_actions_min();
  const int B = model.n_actions_max();
  std::vector<double> kernel(model.transition().size());
  for (int s = 0; s < S; ++s) {
    for (int b = 0; b < B; ++b) {
      for (int a = 0; a < A; ++a) {
        const double* src = model.Slice(s, a, b);
        double* dst = kernel.data() + ((static_cast<size_t>(s) * B + b) * A +
                                       a) * S;
        std::copy(src, src + S, dst);
      }
    }
  }
  return GameModel(S, B, A, std::move(kernel), model.initial_dist(),
                   model.discount());
}

nlohmann::json ModelToJson(const GameModel& model) {
  const int S = model.n_states();
  nlohmann::json transition = nlohmann::json::array();
  for (int s = 0; s < S; ++s) {
    nlohmann::json by_a = nlohmann::json::array();
    for (int a = 0; a < model.n_actions_min(); ++a) {
      nlohmann::json by_b = nlohmann::json::array();
      for (int b = 0; b < model.n_actions_max(); ++b) {
        const double* row = model.Slice(s, a, b);
        by_b.push_back(std::vector<double>(row, row + S));
      }
      by_a.push_back(std::move(by_b));
    }
    transition.push_back(std::move(by_a));
  }
  const Eigen::VectorXd& rho = model.initial_dist();
  return {{"n_states", S},
          {"n_actions_min", model.n_actions_min()},
          {"n_actions_max", model.n_actions_max()},
          {"gamma", model.discount()},
          {"rho", std::vector<double>(rho.data(), rho.data() + rho.size())},
          {"transition", std::move(transition)}};
}

GameModel ModelFromJson(const nlohmann::json& doc) {
  try {
    const int S = doc.at("n_states").get<int>();
    const int A = doc.at("n_actions_min").get<int>();
    const int B = doc.at("n_actions_max").get<int>();
    const auto rho_vec = doc.at("rho").get<std::vector<double>>();
    const auto& tr = doc.at("transition");
    if (S <= 0 || A <= 0 || B <= 0) {
      throw ParameterError("model json: dimensions must be positive");
    }
    if (tr.size() != static_cast<size_t>(S)) {
      throw ParameterError("model json: transition must have n_states rows");
    }
    std::vector<double> kernel;
    kernel.reserve(static_cast<size_t>(S) * A * B * S);
    for (int s = 0; s < S; ++s) {
      if (tr[s].size() != static_cast<size_t>(A)) {
        throw ParameterError("model json: transition[s] must have |A| rows");
      }
      for (int a = 0; a < A; ++a) {
        if (tr[s][a].size() != static_cast<size_t>(B)) {
          throw ParameterError(
              "model json: transition[s][a] must have |B| rows");
        }
        for (int b = 0; b < B; ++b) {
          const auto row = tr[s][a][b].get<std::vector<double>>();
          if (row.size() != static_cast<size_t>(S)) {
            throw ParameterError(
                "model json: transition[s][a][b] must have n_states entries");
          }
          kernel.insert(kernel.end(), row.begin(), row.end());
        }
      }
    }
    Eigen::VectorXd rho =
        Eigen::Map<const Eigen::VectorXd>(rho_vec.data(), rho_vec.size());
    return GameModel(S, A, B, std::move(kernel), std::move(rho),
                     doc.at("gamma").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("model json: ") + e.what());
  }
}

nlohmann::json PolicyToJson(const Policy& policy) {
  nlohmann::json rows = nlohmann::json::array();
  for (int s = 0; s < policy.n_states(); ++s) {
    const Eigen::VectorXd row = policy.table.row(s).transpose();
    rows.push_back(std::vector<double>(row.data(), row.data() + row.size()));
  }
  return rows;
}

}  // namespace cmg
