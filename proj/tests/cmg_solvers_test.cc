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

#include "cmg/cmg_solvers.h"

#include <cmath>
#include <random>
#include <sstream>

#include "cmg/errors.h"
#include "cmg/games.h"
#include "cmg/occupancy.h"
#include "doctest.h"
#include "test_util.h"

namespace cmg {
namespace {

PolicyPair SingleStatePair(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  PolicyPair p;
  p.min_policy = Policy{x.transpose()};
  p.max_policy = Policy{y.transpose()};
  return p;
}

Game MatchingPennies(double gamma = 0.5) {
  Eigen::Matrix2d mp;
  mp << 1.0, -1.0, -1.0, 1.0;
  return BuildMatrixGame(mp, gamma);
}

// Linear coupling plus entropy for both players (convex for min).
Game EntropyBothSides() {
  GameModel m = testing::RandomModel(7, 2, 2, 2, 0.5);
  std::mt19937_64 rng(3);
  UtilitySpec spec = UtilitySpec::Sum(
      {UtilitySpec::Linear(TermSide::kJoint, testing::RandomVector(rng, 8)),
       UtilitySpec::Entropy(Side::kMax, 1.0),
       UtilitySpec::Entropy(Side::kMin, -1.0)});
  return {std::move(m), std::move(spec)};
}

double Loglinear_R2(const std::vector<double>& t, const std::vector<double>& v) {
  double st = 0, sl = 0, stt = 0, stl = 0, sll = 0;
  const double n = static_cast<double>(t.size());
  for (size_t i = 0; i < t.size(); ++i) {
    const double l = std::log(v[i]);
    st += t[i], sl += l, stt += t[i] * t[i], stl += t[i] * l, sll += l * l;
  }
  const double cov = n * stl - st * sl;
  return cov * cov / ((n * stt - st * st) * (n * sll - sl * sl));
}

TEST_CASE("SolverConfig") {
  SolverConfig c;
  CHECK_NOTHROW(c.Validate());
  SUBCASE("invalid fields") {
    SolverConfig bad = c;
    bad.tau_min = 0.0;
    CHECK_THROWS_AS(bad.Validate(), ParameterError);
    bad = c;
    bad.mu_reg = -0.1;
    CHECK_THROWS_AS(bad.Validate(), ParameterError);
    bad = c;
    bad.gradient_mode = GradientMode::kStochastic;
    bad.horizon = 0;
    CHECK_THROWS_AS(bad.Validate(), ParameterError);
    bad = c;
    bad.eval_cadence = 0;
    CHECK_THROWS_AS(bad.Validate(), ParameterError);
  }
  SUBCASE("regularized side") {
    const UtilitySpec lin = MatchingPennies().spec;
    c.mu_reg = 0.2;
    c.algorithm = Algorithm::kNestPg;
    CHECK(c.SideMus(lin) == std::make_pair(0.0, 0.2));
    c.algorithm = Algorithm::kAltPgda;
    CHECK(c.SideMus(lin) == std::make_pair(0.2, 0.0));
    c.regularized_side = RegularizedSide::kBoth;
    CHECK(c.SideMus(lin) == std::make_pair(0.2, 0.2));
    c.regularized_side = RegularizedSide::kMaxOnly;
    CHECK(c.SideMus(lin) == std::make_pair(0.0, 0.2));
  }
  SUBCASE("default mu follows the concavity regime") {
    SolverConfig d;
    CHECK(d.EffectiveMu(MatchingPennies().spec) == 0.05);
    CHECK(d.EffectiveMu(EntropyBothSides().spec) == 0.0);
  }
  SUBCASE("json") {
    c.algorithm = Algorithm::kNestPg;
    c.mu_reg = 0.01;
    c.inner_iters = 7;
    c.gradient_mode = GradientMode::kStochastic;
    c.init = InitMode::kDirichlet;
    c.seed = 99;
    const nlohmann::json j = SolverConfigToJson(c);
    CHECK(SolverConfigToJson(SolverConfigFromJson(j)) == j);
    CHECK_THROWS_WITH_AS(SolverConfigFromJson({{"tau", 0.1}}),
                         doctest::Contains("solver.tau"), ConfigError);
    CHECK_THROWS_WITH_AS(SolverConfigFromJson({{"algorithm", "sgd"}}),
                         doctest::Contains("sgd"), ConfigError);
  }
}

TEST_CASE("BestResponseValue") {
  const Game mp = MatchingPennies();
  const Eigen::Vector2d u(0.5, 0.5);
  SUBCASE("against a uniform opponent every action is optimal") {
    const BestResponse br =
        BestResponseValue(mp.model, mp.spec, SingleStatePair(u, u), Side::kMax);
    CHECK(std::abs(br.value) < 1e-12);
    CHECK(br.certificate == BrCertificate::kExact);
  }
  SUBCASE("against pure heads") {
    const Eigen::Vector2d heads(1.0, 0.0);
    const BestResponse up = BestResponseValue(
        mp.model, mp.spec, SingleStatePair(heads, u), Side::kMax);
    CHECK(up.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(up.policy(0, 0) == 1.0);
    const BestResponse down = BestResponseValue(
        mp.model, mp.spec, SingleStatePair(u, heads), Side::kMin);
    CHECK(down.value == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(down.policy(0, 1) == 1.0);
  }
  SUBCASE("stage RPS-dummy: dummy never in the support") {
    const Game g = BuildIteratedRpsd(0.0);
    Eigen::MatrixXd rps = Eigen::MatrixXd::Constant(16, 4, 1.0 / 3);
    rps.col(3).setZero();
    PolicyPair p{Policy{rps}, Policy{rps}};
    for (Side side : {Side::kMin, Side::kMax}) {
      const BestResponse br = BestResponseValue(g.model, g.spec, p, side);
      CHECK(std::abs(br.value) < 1e-12);
      CHECK(br.policy.table.col(3).maxCoeff() == 0.0);
    }
  }
  SUBCASE("policy iteration matches a scan over deterministic policies") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 20; ++trial) {
      const GameModel m = testing::RandomModel(300 + trial, 3, 2, 3, 0.8);
      const UtilitySpec spec = UtilitySpec::Linear(
          TermSide::kJoint, testing::RandomVector(rng, 3 * 2 * 3));
      const PolicyPair p = testing::RandomPair(rng, m);
      for (Side side : {Side::kMin, Side::kMax}) {
        const int n = m.n_actions(side);
        const double sign = side == Side::kMax ? 1.0 : -1.0;
        double best = -1e300;
        for (int code = 0; code < n * n * n; ++code) {
          Policy det{Eigen::MatrixXd::Zero(3, n)};
          for (int s = 0, c = code; s < 3; ++s, c /= n) det.table(s, c % n) = 1;
          PolicyPair q = p;
          q.policy(side) = det;
          best = std::max(best, sign * EvalUtility(m, spec, q));
        }
        const BestResponse br = BestResponseValue(m, spec, p, side);
        CHECK(sign * br.value == doctest::Approx(best).epsilon(1e-12));
        CHECK(br.residual <= 1e-8);
      }
    }
  }
  SUBCASE("heuristic path for a concave spec") {
    const Game g = EntropyBothSides();
    const PolicyPair p = InitialPair(g.model, SolverConfig{});
    const BestResponse br = BestResponseValue(g.model, g.spec, p, Side::kMax);
    CHECK(br.certificate == BrCertificate::kHeuristic);
    CHECK(br.converged);
    double grid = -1e300;
    for (int i = 0; i <= 100; ++i) {
      for (int j = 0; j <= 100; ++j) {
        PolicyPair q = p;
        q.max_policy.table << i / 100.0, 1 - i / 100.0, j / 100.0,
            1 - j / 100.0;
        grid = std::max(grid, EvalUtility(g.model, g.spec, q));
      }
    }
    CHECK(br.value >= grid - 1e-12);
  }
  BestResponseOptions bad;
  bad.tolerance = 0.0;
  CHECK_THROWS_AS(BestResponseValue(mp.model, mp.spec, SingleStatePair(u, u),
                                    Side::kMax, bad),
                  ParameterError);
}

TEST_CASE("Exploitability") {
  SUBCASE("2x2 equilibrium") {
    Eigen::Matrix2d M;
    M << 2.0, -1.0, -1.0, 1.0;
    const Game g = BuildMatrixGame(M, 0.3);
    const Eigen::Vector2d ne(0.4, 0.6);
    const Exploitability e =
        ComputeExploitability(g.model, g.spec, SingleStatePair(ne, ne));
    CHECK(e.gap <= 1e-12);
    CHECK(e.certificate == BrCertificate::kExact);
    CHECK_FALSE(e.lower_bound);
  }
  const Game mp = MatchingPennies();
  CHECK(ComputeExploitability(mp.model, mp.spec,
                              SingleStatePair(Eigen::Vector2d(0.5, 0.5),
                                              Eigen::Vector2d(0.5, 0.5)))
            .gap <= 1e-12);
  const Exploitability pure = ComputeExploitability(
      mp.model, mp.spec,
      SingleStatePair(Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(0.0, 1.0)));
  CHECK(pure.gap == doctest::Approx(2.0).epsilon(1e-12));
  SUBCASE("one-sided gaps are nonnegative and add up") {
    const Game g = BuildIteratedRpsd(0.9);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      const PolicyPair p = testing::RandomPair(rng, g.model);
      const Exploitability e = ComputeExploitability(g.model, g.spec, p);
      CHECK(e.gap_min_side >= -1e-10);
      CHECK(e.gap_max_side >= -1e-10);
      CHECK(e.gap == doctest::Approx(e.gap_min_side + e.gap_max_side)
                         .epsilon(1e-12));
    }
  }
}

TEST_CASE("SelectBestIterate") {
  auto trace = [](std::vector<double> gaps) {
    std::vector<Checkpoint> cps;
    for (size_t i = 0; i < gaps.size(); ++i) {
      Checkpoint c;
      c.iter = static_cast<long long>(i + 1);
      c.expl.gap = gaps[i];
      cps.push_back(c);
    }
    return cps;
  };
  CHECK(SelectBestIterate(trace({5, 4, 3, 2, 1})) == 4);
  CHECK(SelectBestIterate(trace({3})) == 0);
  CHECK(trace({9, 8, 7, 6, 5, 4, 0.5, 2, 3, 4})[SelectBestIterate(
                  trace({9, 8, 7, 6, 5, 4, 0.5, 2, 3, 4}))]
            .iter == 7);
  CHECK(SelectBestIterate(trace({1, 2, 1, 3})) == 2);
  std::vector<Checkpoint> with_initial = trace({0.5, 0.7});
  with_initial.insert(with_initial.begin(), Checkpoint{});
  CHECK(SelectBestIterate(with_initial) == 1);
  CHECK_THROWS_AS(SelectBestIterate({}), PreconditionError);
}

TEST_CASE("Solvers") {
  SUBCASE("zero utility never moves") {
    const Game mp = MatchingPennies();
    SolverConfig c;
    c.mu_reg = 0.0;
    c.outer_iters = 50;
    c.init = InitMode::kDirichlet;
    c.seed = 4;
    const PolicyPair init = InitialPair(mp.model, c);
    for (Algorithm a : {Algorithm::kNestPg, Algorithm::kAltPgda}) {
      c.algorithm = a;
      const SolverReport r = RunSolver(mp.model, UtilitySpec::Zero(), c);
      for (const Checkpoint& cp : r.checkpoints) {
        CHECK((cp.min_policy.table - init.min_policy.table).norm() == 0.0);
        CHECK((cp.max_policy.table - init.max_policy.table).norm() == 0.0);
      }
    }
  }
  SUBCASE("Nest-PG on iterated RPS-dummy") {
    const Game g = BuildIteratedRpsd(0.9);
    SolverConfig c;
    c.algorithm = Algorithm::kNestPg;
    c.outer_iters = 2000;
    c.inner_iters = 10;
    const SolverReport r = NestPg(g.model, g.spec, c);
    CHECK(r.checkpoints[r.best_index].expl.gap <=
          0.2 * r.checkpoints.front().expl.gap);
    CHECK(r.checkpoints.back().iter == 2000);
    CHECK(r.checkpoints.size() == 81);
    for (const Checkpoint& cp : r.checkpoints) {
      for (const Policy* p : {&cp.min_policy, &cp.max_policy}) {
        CHECK(p->table.minCoeff() >= 0.0);
        CHECK((p->table.rowwise().sum().array() - 1.0).abs().maxCoeff() <=
              1e-10);
      }
      CHECK(cp.expl.gap >= -1e-10);
    }
  }
  SUBCASE("strongly concave spec decays geometrically") {
    const Game g = EntropyBothSides();
    const LocalModuli lm = EstimateLocalModuli(g.model, g.spec, 0.0, 20, 1);
    REQUIRE(lm.mu_min > 0.0);
    REQUIRE(lm.mu_max > 0.0);
    TuneConstants tc;
    tc.smooth = lm.smooth;
    tc.mu = lm.mu_max;
    tc.mu_x = lm.mu_min;
    tc.mu_y = lm.mu_max;
    tc.lipschitz = 1.0;
    tc.diam_x = tc.diam_y = 2.0;
    tc.sigma2_x = tc.sigma2_y = 0.0;
    tc.epsilon = 1e-6;
    const SaddleTuning t = Tune(TuneRegime::kPplPplGdmax, tc);
    SolverConfig c;
    c.algorithm = Algorithm::kNestPg;
    c.tau_min = t.tau_min;
    c.tau_max = t.tau_max;
    c.inner_iters = t.inner_iters;
    c.outer_iters = 400;
    c.eval_cadence = 10;
    const SolverReport r = NestPg(g.model, g.spec, c);
    std::vector<double> ts, gaps;
    for (const Checkpoint& cp : r.checkpoints) {
      if (cp.iter < 1) continue;
      ts.push_back(static_cast<double>(cp.iter));
      gaps.push_back(cp.expl.gap);
    }
    CHECK(gaps.back() < 0.1 * gaps.front());
    CHECK(Loglinear_R2(ts, gaps) >= 0.9);
  }
  SUBCASE("Alt-PGDA on matching pennies stays within the bias bound") {
    const Game mp = MatchingPennies();
    const double mu = 0.05;
    const double bound =
        1e-6 + mu * ComputeOccupancyConstants(mp.model).lip_lambda *
                   std::sqrt(2.0);
    for (RegularizedSide side :
         {RegularizedSide::kPerPaper, RegularizedSide::kBoth}) {
      SolverConfig c;
      c.mu_reg = mu;
      c.regularized_side = side;
      c.init = InitMode::kDirichlet;
      c.outer_iters = 2000;
      const SolverReport r = AltPgda(mp.model, mp.spec, c);
      const Exploitability e =
          ComputeExploitability(mp.model, mp.spec, r.output);
      CHECK(e.gap <= bound);
    }
  }
  SUBCASE("stochastic Alt-PGDA on iterated RPS-dummy") {
    const Game g = BuildIteratedRpsd(0.9);
    double initial = 0.0, final_gap = 0.0;
    const int kSeeds = 20;
    for (int s = 0; s < kSeeds; ++s) {
      SolverConfig c;
      c.gradient_mode = GradientMode::kStochastic;
      c.batch_min = c.batch_max = 256;
      c.horizon = 64;
      c.outer_iters = 200;
      c.seed = static_cast<uint64_t>(s);
      const SolverReport r = AltPgda(g.model, g.spec, c);
      initial += r.checkpoints.front().expl.gap / kSeeds;
      final_gap += r.checkpoints.back().expl.gap / kSeeds;
    }
    CHECK(final_gap <= 0.4 * initial);
  }
  SUBCASE("fixed seed gives identical reports") {
    const Game g = BuildIteratedRpsd(0.8);
    SolverConfig c;
    c.gradient_mode = GradientMode::kStochastic;
    c.batch_min = c.batch_max = 8;
    c.horizon = 8;
    c.outer_iters = 60;
    c.eval_cadence = 10;
    c.init = InitMode::kDirichlet;
    c.seed = 17;
    auto csv = [&](const SolverConfig& cfg) {
      std::ostringstream out;
      RunSolver(g.model, g.spec, cfg).WriteCsv(out);
      return out.str();
    };
    const std::string a = csv(c);
    CHECK(a == csv(c));
    CHECK(a.rfind(kReportCsvHeader, 0) == 0);
    SolverConfig other = c;
    other.seed = 18;
    CHECK(a != csv(other));
    c.algorithm = Algorithm::kNestPg;
    c.inner_iters = 3;
    CHECK(csv(c) == csv(c));
  }
}

TEST_CASE("Lipschitz maximizers along a run") {
  const Game g = BuildIteratedRpsd(0.5);
  const double mu = 0.1;
  const ModuliReport mod = ComputeModuli(g.model, g.spec, mu, ConcavityRegime::kConcave);
  SolverConfig c;
  c.algorithm = Algorithm::kNestPg;
  c.mu_reg = mu;
  c.outer_iters = 40;
  c.eval_cadence = 10;
  c.init = InitMode::kDirichlet;
  const SolverReport r = NestPg(g.model, g.spec, c);
  BestResponseOptions opt;
  opt.mu_reg = mu;
  opt.tolerance = 1e-8;
  opt.starts = 1;
  for (size_t i = 1; i + 1 < r.checkpoints.size(); ++i) {
    PolicyPair a{r.checkpoints[i].min_policy, r.checkpoints[i].max_policy};
    PolicyPair b{r.checkpoints[i + 1].min_policy,
                 r.checkpoints[i + 1].max_policy};
    const BestResponse ya = BestResponseValue(g.model, g.spec, a, Side::kMax, opt);
    const BestResponse yb = BestResponseValue(g.model, g.spec, b, Side::kMax, opt);
    const double dy = (ya.policy.table - yb.policy.table).norm();
    const double dx = (a.min_policy.table - b.min_policy.table).norm();
    CHECK(dy <= mod.lip_maximizer * dx);
  }
}

TEST_CASE("Gradient dominance for linear specs") {
  std::mt19937_64 rng(61);
  int violations = 0;
  for (int trial = 0; trial < 25; ++trial) {
    const GameModel m = testing::RandomModel(700 + trial, 3, 2, 2, 0.7);
    const UtilitySpec spec =
        UtilitySpec::Linear(TermSide::kJoint, testing::RandomVector(rng, 12));
    const double mu_x = GradientDominanceModulus(m);
    const PolicyPair p = testing::RandomPair(rng, m);
    const double gap = EvalUtility(m, spec, p) -
                       BestResponseValue(m, spec, p, Side::kMin).value;
    // max over x' of <grad, x - x'> splits by state into vertex choices.
    const Eigen::MatrixXd g = ExactGrad(m, spec, p, Side::kMin, 0.0);
    double lin = 0.0;
    for (int s = 0; s < 3; ++s) {
      lin += g.row(s).dot(p.min_policy.table.row(s)) - g.row(s).minCoeff();
    }
    if (gap > lin / mu_x + 1e-12) ++violations;
  }
  CHECK(violations == 0);
}

}  // namespace
}  // namespace cmg
