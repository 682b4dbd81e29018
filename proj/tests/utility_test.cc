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

#include "cmg/utility.h"

#include <cmath>
#include <random>

#include "cmg/errors.h"
#include "doctest.h"
#include "test_util.h"

namespace cmg {
namespace {

using testing::MaxRelErr;
using testing::RandomModel;
using testing::RandomPair;
using testing::RandomVector;

GameModel SingleState(int A, int B, double gamma) {
  return GameModel(1, A, B, std::vector<double>(A * B, 1.0),
                   Eigen::VectorXd::Ones(1), gamma);
}

GameModel UniformRhoModel(int S, double gamma) {
  GameModel r = RandomModel(3, S, 2, 2, gamma);
  return GameModel(S, 2, 2, r.transition(),
                   Eigen::VectorXd::Constant(S, 1.0 / S), gamma);
}

std::vector<UtilitySpec> BuiltInSpecs(std::mt19937_64& rng, int S, int A,
                                      int B) {
  std::vector<UtilitySpec> specs;
  specs.push_back(UtilitySpec::Linear(TermSide::kMin, RandomVector(rng, S * A)));
  specs.push_back(UtilitySpec::Linear(TermSide::kMax, RandomVector(rng, S * B)));
  specs.push_back(
      UtilitySpec::Linear(TermSide::kJoint, RandomVector(rng, S * A * B)));
  specs.push_back(UtilitySpec::NegSqNorm(Side::kMax, 1.5));
  specs.push_back(UtilitySpec::NegSqNorm(Side::kMin, -0.7));
  specs.push_back(UtilitySpec::Entropy(Side::kMax, 0.3));
  specs.push_back(UtilitySpec::Entropy(Side::kMin, -0.2));
  specs.push_back(UtilitySpec::Sum(
      {UtilitySpec::Linear(TermSide::kJoint, RandomVector(rng, S * A * B)),
       UtilitySpec::Entropy(Side::kMax, 0.1),
       UtilitySpec::NegSqNorm(Side::kMin, -0.5)},
      0.8));
  return specs;
}

TEST_CASE("EvalUtility examples") {
  std::mt19937_64 rng(31);
  SUBCASE("linear min-side reward on a single state") {
    GameModel m = SingleState(3, 2, 0.6);
    const std::vector<double> r{0.5, -1.0, 2.0};
    const PolicyPair pair = RandomPair(rng, m);
    double expected = 0.0;
    for (int a = 0; a < 3; ++a) expected += r[a] * pair.min_policy(0, a);
    CHECK(EvalUtility(m, UtilitySpec::Linear(TermSide::kMin, r), pair) ==
          doctest::Approx(expected).epsilon(1e-14));
  }
  SUBCASE("zero reward") {
    GameModel m = RandomModel(2, 3, 2, 2, 0.9);
    CHECK(EvalUtility(m,
                      UtilitySpec::Linear(TermSide::kJoint,
                                          std::vector<double>(12, 0.0)),
                      RandomPair(rng, m)) == 0.0);
    CHECK(EvalUtility(m, UtilitySpec::Zero(), RandomPair(rng, m)) == 0.0);
  }
  SUBCASE("matching pennies at uniform play") {
    GameModel m = SingleState(2, 2, 0.5);
    const UtilitySpec mp =
        UtilitySpec::Linear(TermSide::kJoint, {1.0, -1.0, -1.0, 1.0});
    PolicyPair u{Policy::Uniform(1, 2), Policy::Uniform(1, 2)};
    CHECK(EvalUtility(m, mp, u) == doctest::Approx(0.0));
  }
  SUBCASE("entropy with zero entries") {
    GameModel m = SingleState(2, 2, 0.5);
    PolicyPair pair{Policy::Uniform(1, 2), Policy::Uniform(1, 2)};
    pair.max_policy.table << 1.0, 0.0;
    CHECK(EvalUtility(m, UtilitySpec::Entropy(Side::kMax, 1.0), pair) == 0.0);
  }
  SUBCASE("reward size mismatch") {
    GameModel m = SingleState(2, 2, 0.5);
    CHECK_THROWS_AS(EvalUtility(m, UtilitySpec::Linear(TermSide::kMin, {1.0}),
                                RandomPair(rng, m)),
                    ParameterError);
  }
}

TEST_CASE("EvalUtilityReg examples") {
  std::mt19937_64 rng(32);
  GameModel m = SingleState(2, 4, 0.5);
  const UtilitySpec spec =
      UtilitySpec::Linear(TermSide::kMax, {1.0, 2.0, 3.0, 4.0});
  PolicyPair pair = RandomPair(rng, m);
  CHECK(EvalUtilityReg(m, spec, pair, 0.0) == EvalUtility(m, spec, pair));
  pair.max_policy = Policy::Uniform(1, 4);
  CHECK(EvalUtility(m, spec, pair) - EvalUtilityReg(m, spec, pair, 0.3) ==
        doctest::Approx(0.3 / 2.0 / 4.0).epsilon(1e-14));
  pair.max_policy.table << 0.0, 0.0, 1.0, 0.0;
  CHECK(EvalUtility(m, spec, pair) - EvalUtilityReg(m, spec, pair, 2.0) ==
        doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(EvalUtilityReg(m, spec, pair, -1e-3), ParameterError);
}

TEST_CASE("ExactGrad examples") {
  std::mt19937_64 rng(33);
  SUBCASE("linear single-state min side gives the reward") {
    // Table entries are free variables, so with gamma > 0 the row mass also
    // feeds the continuation; that adds gamma <r, x> / (1 - gamma) to every
    // entry, a shift orthogonal to the simplex.
    const std::vector<double> r{0.5, -1.0, 2.0};
    const UtilitySpec spec = UtilitySpec::Linear(TermSide::kMin, r);
    for (double gamma : {0.0, 0.7}) {
      GameModel m = SingleState(3, 2, gamma);
      const PolicyPair pair = RandomPair(rng, m);
      const Eigen::MatrixXd g = ExactGrad(m, spec, pair, Side::kMin, 0.0);
      double rx = 0.0;
      for (int a = 0; a < 3; ++a) rx += r[a] * pair.min_policy(0, a);
      for (int a = 0; a < 3; ++a) {
        CHECK(g(0, a) - gamma * rx / (1.0 - gamma) ==
              doctest::Approx(r[a]).epsilon(1e-12));
      }
    }
  }
  SUBCASE("zero spec") {
    GameModel m = RandomModel(4, 3, 2, 2, 0.9);
    for (Side side : {Side::kMin, Side::kMax}) {
      CHECK(ExactGrad(m, UtilitySpec::Zero(), RandomPair(rng, m), side, 0.0)
                .cwiseAbs()
                .maxCoeff() == 0.0);
    }
  }
  SUBCASE("entropy on a random 3-state model") {
    GameModel m = RandomModel(5, 3, 2, 3, 0.9);
    const PolicyPair pair = RandomPair(rng, m);
    for (Side side : {Side::kMin, Side::kMax}) {
      const UtilitySpec spec = UtilitySpec::Entropy(side, 1.0);
      CHECK(MaxRelErr(ExactGrad(m, spec, pair, side, 0.0),
                      ExactGradFiniteDiff(m, spec, pair, side, 0.0)) < 1e-5);
    }
  }
}

TEST_CASE("Gradient consistency for every built-in spec") {
  std::mt19937_64 rng(34);
  int checked = 0;
  for (int trial = 0; trial < 13; ++trial) {
    GameModel m = RandomModel(300 + trial, 3, 2, 3, 0.5 + 0.03 * trial);
    const std::vector<UtilitySpec> specs = BuiltInSpecs(rng, 3, 2, 3);
    for (const UtilitySpec& spec : specs) {
      PolicyPair pair = RandomPair(rng, m);
      // Keep the point interior so the entropy curvature is resolved by the
      // finite-difference step.
      pair.min_policy = EpsilonGreedy(pair.min_policy, 0.1, 2);
      pair.max_policy = EpsilonGreedy(pair.max_policy, 0.1, 3);
      const double mu = trial % 2 == 0 ? 0.0 : 0.25;
      for (Side side : {Side::kMin, Side::kMax}) {
        const Eigen::MatrixXd g = ExactGrad(m, spec, pair, side, mu);
        const Eigen::MatrixXd fd = ExactGradFiniteDiff(m, spec, pair, side, mu);
        const Eigen::MatrixXd gj = ExactGradViaJacobian(m, spec, pair, side, mu);
        CHECK(MaxRelErr(g, fd) < 1e-5);
        CHECK(MaxRelErr(g, gj) < 1e-10);
      }
      ++checked;
    }
  }
  CHECK(checked >= 100);
}

TEST_CASE("Joint gradient matches finite differences of F") {
  std::mt19937_64 rng(35);
  GameModel m = RandomModel(6, 2, 3, 2, 0.8);
  for (const UtilitySpec& spec : BuiltInSpecs(rng, 2, 3, 2)) {
    const OccupancyMeasure occ = ExactOccupancy(m, RandomPair(rng, m));
    const std::vector<double> g = spec.JointGradient(occ);
    for (size_t k = 0; k < occ.joint.size(); ++k) {
      std::vector<double> plus = occ.joint;
      std::vector<double> minus = occ.joint;
      plus[k] += 1e-6;
      minus[k] -= 1e-6;
      auto make = [&](std::vector<double> j) {
        return OccupancyMeasure::FromJoint(2, 3, 2, std::move(j), 0.8,
                                           OccupancyConvention::kNormalized);
      };
      const double fd =
          (spec.Value(make(plus)) - spec.Value(make(minus))) / 2e-6;
      CHECK(std::abs(fd - g[k]) < 1e-6 * std::max(1.0, std::abs(g[k])));
    }
  }
}

TEST_CASE("RegularizerBiasBound") {
  std::mt19937_64 rng(36);
  GameModel m = RandomModel(7, 2, 2, 2, 0.5);
  CHECK(RegularizerBiasBound(m, 0.0) == 0.0);
  CHECK(RegularizerBiasBound(m, 0.01) ==
        doctest::Approx(0.01 * 16.0 * std::sqrt(2.0)).epsilon(1e-14));
  CHECK(RegularizerBiasBound(m, 0.01) == doctest::Approx(0.2263).epsilon(1e-3));
  CHECK_THROWS_AS(RegularizerBiasBound(m, -1.0), ParameterError);
  const UtilitySpec spec =
      UtilitySpec::Linear(TermSide::kJoint, RandomVector(rng, 8));
  for (int trial = 0; trial < 100; ++trial) {
    const PolicyPair pair = RandomPair(rng, m);
    const double mu = 0.5;
    for (Side side : {Side::kMin, Side::kMax}) {
      const double gap = (ExactGrad(m, spec, pair, side, 0.0) -
                          ExactGrad(m, spec, pair, side, mu))
                             .norm();
      CHECK(gap <= RegularizerBiasBound(m, mu));
    }
  }
}

TEST_CASE("ComputeModuli") {
  SUBCASE("quadratic growth arithmetic") {
    GameModel m = UniformRhoModel(4, 0.5);
    const UtilitySpec spec =
        UtilitySpec::Linear(TermSide::kJoint, std::vector<double>(16, 1.0));
    const ModuliReport r =
        ComputeModuli(m, spec, 1.0, ConcavityRegime::kConcave);
    CHECK(r.mu_qg == doctest::Approx(0.00390625).epsilon(1e-14));
  }
  SUBCASE("gradient dominance") {
    GameModel m = UniformRhoModel(16, 0.9);
    CHECK(GradientDominanceModulus(m) ==
          doctest::Approx(0.1 * 0.0625 / (2.0 * std::sqrt(2.0))).epsilon(1e-12));
    CHECK(GradientDominanceModulus(m) == doctest::Approx(2.2097e-3).epsilon(1e-4));
  }
  SUBCASE("quadratic growth shrinks monotonically with the regularizer") {
    GameModel m = UniformRhoModel(3, 0.7);
    const UtilitySpec spec =
        UtilitySpec::Linear(TermSide::kMax, std::vector<double>(6, 0.5));
    double prev = 1e300;
    for (double mu : {1.0, 0.5, 0.1, 1e-2, 1e-4, 1e-8}) {
      const ModuliReport r = ComputeModuli(m, spec, mu, ConcavityRegime::kConcave);
      CHECK(r.mu_qg < prev);
      prev = r.mu_qg;
    }
    CHECK(prev < 1e-9);
  }
  SUBCASE("no strong concavity") {
    GameModel m = UniformRhoModel(2, 0.5);
    const UtilitySpec spec =
        UtilitySpec::Linear(TermSide::kMax, std::vector<double>(4, 1.0));
    CHECK_THROWS_WITH_AS(
        ComputeModuli(m, spec, 0.0, ConcavityRegime::kConcave),
        doctest::Contains("no strong concavity available"), ParameterError);
    CHECK_THROWS_WITH_AS(
        ComputeModuli(m, spec, 0.0, ConcavityRegime::kStronglyConcave),
        doctest::Contains("no strong concavity available"), ParameterError);
  }
  SUBCASE("report invariants") {
    std::mt19937_64 rng(37);
    GameModel m = RandomModel(8, 3, 2, 2, 0.8);
    for (const UtilitySpec& spec : BuiltInSpecs(rng, 3, 2, 2)) {
      const ModuliReport c =
          ComputeModuli(m, spec, 0.1, ConcavityRegime::kConcave);
      const ModuliReport s =
          ComputeModuli(m, spec, 0.1, ConcavityRegime::kStronglyConcave);
      for (const ModuliReport& r : {c, s}) {
        for (double v : {r.mu_qg, r.mu_pl, r.kappa, r.lip_maximizer,
                         r.smooth_phi, r.lip_U, r.smooth_U}) {
          CHECK(v >= 0.0);
          CHECK(std::isfinite(v));
        }
        if (r.smooth >= std::sqrt(r.mu_qg * r.mu_pl)) CHECK(r.kappa >= 1.0);
        CHECK(r.smooth_phi ==
              doctest::Approx(r.smooth * (1.0 + r.lip_maximizer)));
        CHECK(r.entropy_clamp == kEntropyFloor);
      }
    }
  }
  SUBCASE("concave regime closed form for kappa") {
    GameModel m = UniformRhoModel(3, 0.6);
    const UtilitySpec spec = UtilitySpec::NegSqNorm(Side::kMax, 2.0);
    const double mu = 0.2;
    const ModuliReport r = ComputeModuli(m, spec, mu, ConcavityRegime::kConcave);
    const double rho = 1.0 / 3.0, g = 0.6, S = 3.0, N = 4.0;
    const double lf = spec.SmoothF() + mu;
    const double closed = 16.0 * std::pow(lf, 1.5) * std::pow(g, 3) *
                          std::pow(S, 2.25) * std::pow(N, 6) /
                          (std::pow(rho, 3) * std::pow(1.0 - g, 15) *
                           std::pow(mu, 1.5));
    CHECK(r.kappa == doctest::Approx(closed).epsilon(1e-10));
  }
}

TEST_CASE("Modulus conversions") {
  CHECK(QgFromHiddenStrongConvexity(0.5, 2.0) == doctest::Approx(0.5));
  CHECK(QgFromPpl(0.3) == 0.3);
  const double l = 2.0, mc = 0.5, mh = 1.0;
  const double c = 1.0 + 2.0 * l / (2.0 * mc * mc * mh);
  CHECK(PplFromHiddenStrongConvexity(l, mc, mh) ==
        doctest::Approx(l / (1.0 + 4.0 * c * c)));
}

TEST_CASE("Utility JSON round trip") {
  std::mt19937_64 rng(38);
  for (const UtilitySpec& spec : BuiltInSpecs(rng, 2, 2, 2)) {
    const UtilitySpec back =
        UtilityFromJson(nlohmann::json::parse(UtilityToJson(spec).dump()));
    GameModel m = RandomModel(9, 2, 2, 2, 0.7);
    const PolicyPair pair = RandomPair(rng, m);
    CHECK(EvalUtility(m, back, pair) == EvalUtility(m, spec, pair));
  }
  CHECK_THROWS_AS(UtilityFromJson(nlohmann::json{{"kind", "cubic"}}),
                  ParameterError);
  CHECK_THROWS_AS(UtilityFromJson(nlohmann::json{{"kind", "linear"}}),
                  ParameterError);
}

}  // namespace
}  // namespace cmg
