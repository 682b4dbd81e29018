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

#ifndef CMG_TESTS_TEST_UTIL_H_
#define CMG_TESTS_TEST_UTIL_H_

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "cmg/game_model.h"

namespace cmg::testing {

inline Eigen::VectorXd RandomSimplex(std::mt19937_64& rng, int n) {
  std::exponential_distribution<double> e(1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = e(rng);
  return v / v.sum();
}

inline GameModel RandomModel(uint64_t seed, int S, int A, int B,
                             double gamma) {
  std::mt19937_64 rng(seed);
  std::vector<double> p;
  p.reserve(static_cast<size_t>(S) * A * B * S);
  for (int k = 0; k < S * A * B; ++k) {
    const Eigen::VectorXd row = RandomSimplex(rng, S);
    p.insert(p.end(), row.data(), row.data() + S);
  }
  Eigen::VectorXd rho = RandomSimplex(rng, S);
  rho = (rho.array() + 0.05).matrix();
  rho /= rho.sum();
  return GameModel(S, A, B, std::move(p), rho, gamma);
}

inline Policy RandomPolicy(std::mt19937_64& rng, int S, int n) {
  Policy p;
  p.table.resize(S, n);
  for (int s = 0; s < S; ++s) p.table.row(s) = RandomSimplex(rng, n);
  return p;
}

inline PolicyPair RandomPair(std::mt19937_64& rng, const GameModel& m) {
  PolicyPair pair;
  pair.min_policy = RandomPolicy(rng, m.n_states(), m.n_actions_min());
  pair.max_policy = RandomPolicy(rng, m.n_states(), m.n_actions_max());
  return pair;
}

inline std::vector<double> RandomVector(std::mt19937_64& rng, size_t n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& e : v) e = g(rng);
  return v;
}

inline double MaxRelErr(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace cmg::testing

#endif  // CMG_TESTS_TEST_UTIL_H_
