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

// Acceptance checks AC1..AC10. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails. Pass criterion names (e.g. AC3 AC7)
// to run a subset.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "cmg/bench.h"
#include "cmg/cmg_solvers.h"
#include "cmg/game_model.h"
#include "cmg/games.h"
#include "cmg/minmax_opt.h"
#include "cmg/occupancy.h"
#include "cmg/sampling.h"
#include "cmg/utility.h"
#include "enumeration.h"
#include "test_util.h"

namespace cmg {
namespace {

using testing::RandomModel;
using testing::RandomPair;
using testing::RandomVector;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
std::string Fmt(const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, ap);
  va_end(ap);
  return buf;
}

double LogLinearR2(const std::vector<double>& t, const std::vector<double>& v) {
  double st = 0, sl = 0, stt = 0, stl = 0, sll = 0;
  const double n = static_cast<double>(t.size());
  for (size_t i = 0; i < t.size(); ++i) {
    const double l = std::log(v[i]);
    st += t[i], sl += l, stt += t[i] * t[i], stl += t[i] * l, sll += l * l;
  }
  const double cov = n * stl - st * sl;
  return cov * cov / ((n * stt - st * st) * (n * sll - sl * sl));
}

double LogLinearSlope(const std::vector<double>& t,
                      const std::vector<double>& v) {
  double st = 0, sl = 0, stt = 0, stl = 0;
  const double n = static_cast<double>(t.size());
  for (size_t i = 0; i < t.size(); ++i) {
    const double l = std::log(v[i]);
    st += t[i], sl += l, stt += t[i] * t[i], stl += t[i] * l;
  }
  return (n * stl - st * sl) / (n * stt - st * st);
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

// Occupancy: Bellman flow and agreement with the truncated sum.
Outcome Ac1() {
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<int> states(1, 5), actions(1, 4);
  std::uniform_real_distribution<double> disc(0.0, 0.95);
  double flow_err = 0.0, trunc_err = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int S = states(rng), A = actions(rng), B = actions(rng);
    const double gamma = trial == 0 ? 0.95 : disc(rng);
    const GameModel m = RandomModel(5000 + trial, S, A, B, gamma);
    const PolicyPair pair = RandomPair(rng, m);
    const OccupancyMeasure occ = ExactOccupancy(m, pair);
    for (int s = 0; s < S; ++s) {
      double inflow = (1.0 - gamma) * m.initial_dist()(s);
      for (int sp = 0; sp < S; ++sp)
        for (int a = 0; a < A; ++a)
          for (int b = 0; b < B; ++b)
            inflow += gamma * occ.joint_at(sp, a, b) * m.P(sp, a, b, s);
      flow_err = std::max(flow_err, std::abs(occ.state(s) - inflow));
    }
    const int H =
        gamma == 0.0
            ? 1
            : static_cast<int>(std::ceil(std::log(1e-10) / std::log(gamma))) +
                  1;
    const OccupancyMeasure tr =
        NormalizeTruncated(TruncatedOccupancy(m, pair, H), m, pair);
    for (size_t k = 0; k < occ.joint.size(); ++k)
      trunc_err = std::max(trunc_err, std::abs(occ.joint[k] - tr.joint[k]));
  }
  return {flow_err <= 1e-8 && trunc_err <= 1e-6,
          Fmt("50 models, max flow residual %.2e, max |exact - truncated| "
              "%.2e",
              flow_err, trunc_err)};
}

// Exact policy gradients against central differences.
Outcome Ac2() {
  std::mt19937_64 rng(1002);
  std::uniform_int_distribution<int> states(1, 4), actions(2, 3);
  int triples = 0;
  double worst = 0.0;
  std::set<int> kinds;
  while (triples < 100) {
    const int S = states(rng), A = actions(rng), B = actions(rng);
    const GameModel m = RandomModel(6000 + triples, S, A, B,
                                    0.3 + 0.6 * (triples % 10) / 10.0);
    const std::vector<UtilitySpec> specs = BuiltInSpecs(rng, S, A, B);
    const int k = triples % static_cast<int>(specs.size());
    kinds.insert(k);
    PolicyPair pair = RandomPair(rng, m);
    pair.min_policy = EpsilonGreedy(pair.min_policy, 0.1, A);
    pair.max_policy = EpsilonGreedy(pair.max_policy, 0.1, B);
    const double mu = triples % 3 == 0 ? 0.2 : 0.0;
    for (Side side : {Side::kMin, Side::kMax}) {
      const Eigen::MatrixXd g = ExactGrad(m, specs[k], pair, side, mu);
      const Eigen::MatrixXd fd =
          ExactGradFiniteDiff(m, specs[k], pair, side, mu);
      worst = std::max(worst, testing::MaxRelErr(g, fd));
    }
    ++triples;
  }
  return {worst <= 1e-5,
          Fmt("%d triples over %zu specs, max relative error %.2e", triples,
              kinds.size(), worst)};
}

// REINFORCE batch estimator: unbiased at H, second-moment bound, bias decay.
Outcome Ac3() {
  const GameModel m = RandomModel(7003, 2, 2, 2, 0.8);
  std::mt19937_64 rng(1003);
  PolicyPair pair = RandomPair(rng, m);
  const double eps = 0.1;
  pair.explore_min = pair.explore_max = eps;
  const UtilitySpec spec =
      UtilitySpec::Linear(TermSide::kJoint, RandomVector(rng, 8));
  const int H = 4, M = 100000;
  double worst_z = 0.0, worst_ratio_m2 = 0.0, worst_decay = 0.0;
  bool ok = true;
  for (Side side : {Side::kMin, Side::kMax}) {
    BatchConfig cfg;
    cfg.batch_size = M;
    cfg.horizon = H;
    cfg.seed = 99;
    const GradEstimate est = BatchGrad(m, spec, pair, side, cfg);
    const Eigen::MatrixXd truth =
        testing::FiniteHorizonGradient(m, pair, side, est.pseudo_reward, H);
    for (int i = 0; i < truth.rows(); ++i) {
      for (int j = 0; j < truth.cols(); ++j) {
        const double se = std::sqrt(est.sample_variance(i, j) / M);
        const double z = std::abs(est.gradient(i, j) - truth(i, j)) /
                         std::max(se, 1e-300);
        worst_z = std::max(worst_z, z);
      }
    }
    const double lip = spec.LipF(2, 2, 2);
    const double bound =
        ComputeEstimatorBounds(lip, m.discount(), eps, 1, H).variance_bound;
    worst_ratio_m2 =
        std::max(worst_ratio_m2, est.empirical_second_moment / bound);
    ok = ok && est.empirical_second_moment <= bound;

    // Bias of the H-step estimator against the infinite-horizon gradient,
    // both in the normalized convention.
    const Eigen::MatrixXd full =
        (1.0 - pair.explore(side)) *
        ExactGrad(m, spec, Played(pair), side, 0.0);
    std::vector<double> hs, bias;
    for (int h = 10; h <= 30; ++h) {
      const Eigen::MatrixXd gh =
          (1.0 - m.discount()) *
          testing::FiniteHorizonGradient(m, pair, side, est.pseudo_reward, h);
      hs.push_back(h);
      bias.push_back((gh - full).norm());
    }
    const double ratio = std::pow(bias.back() / bias.front(), 1.0 / 20.0);
    worst_decay = std::max(worst_decay, ratio);
  }
  ok = ok && worst_z <= 4.0 && worst_decay <= m.discount() + 0.05;
  return {ok, Fmt("M=%d H=%d: max |z| %.2f (<= 4); second moment / bound "
                  "%.3g (<= 1); bias ratio per step over H in [10, 30] %.4f "
                  "(<= %.2f)",
                  M, H, worst_z, worst_ratio_m2, worst_decay,
                  m.discount() + 0.05)};
}

// Stationarity proxy: monotone in alpha and D_X(x, a) >= a^2 ||x+ - x||^2.
Outcome Ac4() {
  std::mt19937_64 rng(1004);
  std::normal_distribution<double> n(0.0, 1.0);
  std::exponential_distribution<double> e(1.0);
  std::uniform_real_distribution<double> u(0.05, 20.0);
  std::uniform_int_distribution<int> nb(1, 4), bs(1, 5);
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<int> blocks(nb(rng));
    int dim = 0;
    for (int& b : blocks) dim += (b = bs(rng));
    const Projector p = SimplexProductProjector(blocks);
    Eigen::VectorXd pt(dim), g(dim);
    for (int i = 0; i < dim; ++i) pt(i) = e(rng), g(i) = 3.0 * n(rng);
    pt = p(pt);
    double a1 = u(rng), a2 = u(rng);
    if (a1 > a2) std::swap(a1, a2);
    const double d1 = StationarityProxy(g, pt, a1, p);
    const double d2 = StationarityProxy(g, pt, a2, p);
    if (d1 > d2 + 1e-12 * std::max(1.0, std::abs(d2))) ++violations;
    const Eigen::VectorXd plus = p(pt - g / a1);
    if (d1 < a1 * a1 * (plus - pt).squaredNorm() - 1e-12) ++violations;
  }
  return {violations == 0, Fmt("1000 instances, %d violations", violations)};
}

PolicyPair DirichletPair(std::mt19937_64& rng, const GameModel& m) {
  return RandomPair(rng, m);
}

// Lipschitz continuity of the regularized best response.
Outcome Ac5() {
  const Game g = BuildIteratedRpsd(0.9);
  const double mu = 0.1;
  const ModuliReport mod =
      ComputeModuli(g.model, g.spec, mu, ConcavityRegime::kConcave);
  BestResponseOptions opt;
  opt.mu_reg = mu;
  opt.tolerance = 1e-8;
  opt.starts = 1;
  std::mt19937_64 rng(1005);
  int violations = 0, unconverged = 0;
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    PolicyPair a = DirichletPair(rng, g.model);
    PolicyPair b = DirichletPair(rng, g.model);
    if (k % 2 == 1) {
      // Nearby pair: a small step toward another policy.
      b.min_policy.table =
          0.99 * a.min_policy.table + 0.01 * b.min_policy.table;
    }
    const BestResponse ya = BestResponseValue(g.model, g.spec, a, Side::kMax, opt);
    const BestResponse yb = BestResponseValue(g.model, g.spec, b, Side::kMax, opt);
    if (!ya.converged || !yb.converged) ++unconverged;
    const double dy = (ya.policy.table - yb.policy.table).norm();
    const double dx = (a.min_policy.table - b.min_policy.table).norm();
    worst = std::max(worst, dy / dx);
    if (dy > mod.lip_maximizer * dx) ++violations;
  }
  return {violations == 0 && unconverged == 0,
          Fmt("50 pairs, %d violations, %d unconverged responses, max "
              "||dy||/||dx|| %.3g vs L_* %.3g",
              violations, unconverged, worst, mod.lip_maximizer)};
}

// Gradient dominance of linear specs against the exact inner minimum.
Outcome Ac6() {
  std::mt19937_64 rng(1006);
  std::uniform_int_distribution<int> states(1, 4), actions(2, 3);
  int violations = 0;
  double tightest = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int S = states(rng), A = actions(rng), B = actions(rng);
    const GameModel m = RandomModel(8000 + trial, S, A, B, 0.3 + 0.006 * trial);
    const UtilitySpec spec =
        trial % 3 == 0
            ? UtilitySpec::Linear(TermSide::kMin, RandomVector(rng, S * A))
            : UtilitySpec::Linear(TermSide::kJoint,
                                  RandomVector(rng, S * A * B));
    const double mu_x = GradientDominanceModulus(m);
    const PolicyPair p = RandomPair(rng, m);
    const double gap = EvalUtility(m, spec, p) -
                       BestResponseValue(m, spec, p, Side::kMin).value;
    const Eigen::MatrixXd g = ExactGrad(m, spec, p, Side::kMin, 0.0);
    double lin = 0.0;
    for (int s = 0; s < S; ++s) {
      lin += g.row(s).dot(p.min_policy.table.row(s)) - g.row(s).minCoeff();
    }
    if (gap > lin / mu_x + 1e-12) ++violations;
    if (lin > 0.0) tightest = std::max(tightest, gap * mu_x / lin);
  }
  return {violations == 0,
          Fmt("100 pairs, %d violations, max gap / bound %.3g", violations,
              tightest)};
}

// Two-sided quadratic cMG: hidden strongly convex in x, strongly concave in y.
Game QuadraticGame() {
  GameModel m = RandomModel(9007, 2, 2, 2, 0.5);
  std::mt19937_64 rng(1007);
  std::vector<double> r = RandomVector(rng, 8);
  for (double& v : r) v *= 0.1;
  UtilitySpec spec = UtilitySpec::Sum(
      {UtilitySpec::Linear(TermSide::kJoint, std::move(r)),
       UtilitySpec::NegSqNorm(Side::kMax, 4.0),
       UtilitySpec::NegSqNorm(Side::kMin, -4.0)});
  return {std::move(m), std::move(spec)};
}

Outcome Ac7() {
  const Game g = QuadraticGame();
  const LocalModuli lm = EstimateLocalModuli(g.model, g.spec, 0.0, 20, 7);
  TuneConstants tc;
  tc.smooth = lm.smooth;
  tc.mu_x = lm.mu_min;
  tc.mu_y = lm.mu_max;
  tc.lipschitz = 1.0;
  tc.diam_x = tc.diam_y = 2.0;
  tc.sigma2_x = tc.sigma2_y = 0.0;
  tc.epsilon = 1e-6;
  SaddleTuning t = Tune(TuneRegime::kPplPplAltGda, tc);
  t.iters = 2000;

  SolverConfig cfg;
  cfg.mu_reg = 0.0;
  OracleSpec oracle = MakeGameOracle(g.model, g.spec, cfg);
  const int S = g.model.n_states();
  const int A = g.model.n_actions_min(), B = g.model.n_actions_max();
  BestResponseOptions bro;
  bro.tolerance = 1e-10;
  bro.starts = 1;
  oracle.phi = [&](const Eigen::VectorXd& x) {
    PolicyPair p{Policy{Unflatten(x, S, A)}, Policy::Uniform(S, B)};
    return BestResponseValue(g.model, g.spec, p, Side::kMax, bro).value;
  };
  RunOptions opt;
  opt.lyapunov_alpha = 0.1;
  opt.snapshot_every = 20;
  cfg.init = InitMode::kDirichlet;
  cfg.seed = 3;
  const PolicyPair init = InitialPair(g.model, cfg);
  const IterTrace tr = AltGda(
      oracle, t, SimplexProductProjector(std::vector<int>(S, A)),
      SimplexProductProjector(std::vector<int>(S, B)),
      Flatten(init.min_policy.table), Flatten(init.max_policy.table), opt);
  int decreases = 0;
  for (size_t i = 1; i < tr.records.size(); ++i) {
    if (*tr.records[i].lyapunov < *tr.records[i - 1].lyapunov) ++decreases;
  }
  const double frac =
      static_cast<double>(decreases) / (tr.records.size() - 1);
  std::vector<double> ts, gaps;
  for (const Snapshot& sn : tr.snapshots) {
    if (sn.iter < 1) continue;
    PolicyPair p{Policy{Unflatten(sn.x, S, A)}, Policy{Unflatten(sn.y, S, B)}};
    ts.push_back(static_cast<double>(sn.iter));
    gaps.push_back(ComputeExploitability(g.model, g.spec, p, 1e-10).gap);
  }
  const double r2 = LogLinearR2(ts, gaps);
  const double slope = LogLinearSlope(ts, gaps);
  return {frac >= 0.95 && r2 >= 0.9 && slope < 0.0,
          Fmt("tau_x %.3g tau_y %.3g (l %.3g mu_x %.3g mu_y %.3g); "
              "Lyapunov decreased in %.1f%% of %zu steps; exploitability "
              "%.3g -> %.3g, log-linear R^2 %.4f, slope %.3g",
              t.tau_min, t.tau_max, lm.smooth, lm.mu_min, lm.mu_max,
              100.0 * frac, tr.records.size() - 1, gaps.front(), gaps.back(),
              r2, slope)};
}

// Mean exploitability curve of each mu section.
std::vector<std::vector<double>> MeanCurves(const ExperimentConfig& c,
                                            const ExperimentResult& r) {
  std::vector<std::vector<double>> curves;
  for (size_t m = 0; m < c.mu_grid.size(); ++m) {
    std::vector<double> mean;
    for (int t = 0; t < c.trials; ++t) {
      const auto& cps = r.trials[m * c.trials + t].report.checkpoints;
      if (mean.empty()) mean.assign(cps.size(), 0.0);
      for (size_t k = 0; k < cps.size(); ++k) mean[k] += cps[k].expl.gap / c.trials;
    }
    curves.push_back(std::move(mean));
  }
  return curves;
}

double TailMean(const std::vector<double>& v) {
  const size_t n = std::max<size_t>(1, v.size() / 10);
  double s = 0.0;
  for (size_t k = v.size() - n; k < v.size(); ++k) s += v[k];
  return s / n;
}

// Per-trial mean squared change between successive checkpoints, averaged over
// trials. The first change (from the initial point) is left out.
std::vector<double> CheckpointVariation(const ExperimentConfig& c,
                                        const ExperimentResult& r) {
  std::vector<double> per_trial;
  for (int t = 0; t < c.trials; ++t) {
    const auto& cps = r.trials[t].report.checkpoints;
    double s = 0.0;
    int n = 0;
    for (size_t k = 2; k < cps.size(); ++k) {
      const double d = cps[k].expl.gap - cps[k - 1].expl.gap;
      s += d * d;
      ++n;
    }
    per_trial.push_back(s / n);
  }
  return per_trial;
}

double Mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / v.size();
}

int Jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

Outcome Ac8() {
  const ExperimentConfig alt = ExperimentFromJson({{"preset", "fig1_altpgda"}});
  const ExperimentResult ra = RunExperiment(alt, Jobs());
  const auto curves = MeanCurves(alt, ra);
  size_t i01 = 0;
  for (size_t m = 0; m < alt.mu_grid.size(); ++m) {
    if (alt.mu_grid[m] == 0.01) i01 = m;
  }
  const std::vector<double>& c01 = curves[i01];
  const double best = *std::min_element(c01.begin() + 1, c01.end());
  const bool a_ok = best <= 0.4 * c01.front();
  std::vector<std::pair<double, double>> tails;
  for (size_t m = 0; m < alt.mu_grid.size(); ++m) {
    tails.emplace_back(alt.mu_grid[m], TailMean(curves[m]));
  }
  std::sort(tails.begin(), tails.end());
  bool b_ok = true;
  for (size_t k = 1; k < tails.size(); ++k) {
    b_ok = b_ok && tails[k].second >= tails[k - 1].second;
  }
  const ExperimentConfig n10 = ExperimentFromJson({{"preset", "fig1_nestpg_10"}});
  const ExperimentConfig n100 =
      ExperimentFromJson({{"preset", "fig1_nestpg_100"}});
  const ExperimentResult r10 = RunExperiment(n10, Jobs());
  const ExperimentResult r100 = RunExperiment(n100, Jobs());
  const std::vector<double> t10 = CheckpointVariation(n10, r10);
  const std::vector<double> t100 = CheckpointVariation(n100, r100);
  auto best_ratio = [](const std::vector<double>& c) {
    return *std::min_element(c.begin() + 1, c.end()) / c.front();
  };
  const double b10 = best_ratio(MeanCurves(n10, r10)[0]);
  const double b100 = best_ratio(MeanCurves(n100, r100)[0]);
  const double v10 = Mean(t10), v100 = Mean(t100);
  const bool c_ok = v100 < v10;
  // Paired over trials (both presets share trial seeds).
  std::vector<double> diff(t10.size());
  for (size_t k = 0; k < diff.size(); ++k) diff[k] = t100[k] - t10[k];
  const double dm = Mean(diff);
  double dv = 0.0;
  for (double d : diff) dv += (d - dm) * (d - dm);
  const double dse = std::sqrt(dv / (diff.size() - 1) / diff.size());
  int lower = 0;
  for (double d : diff) lower += d < 0.0;
  std::printf("AC8a %s  Alt-PGDA mu=0.01: mean exploitability %.4f -> best "
              "%.4f (ratio %.3f, need <= 0.4), final %.4f\n",
              a_ok ? "PASS" : "FAIL", c01.front(), best, best / c01.front(),
              c01.back());
  std::printf("AC8b %s  converged exploitability (last 10%% of checkpoints) "
              "mu=%g: %.4f, mu=%g: %.4f, mu=%g: %.4f\n",
              b_ok ? "PASS" : "FAIL", tails[0].first, tails[0].second,
              tails[1].first, tails[1].second, tails[2].first,
              tails[2].second);
  std::printf("AC8c %s  Nest-PG checkpoint-to-checkpoint variation: T_in=10 "
              "%.4g, T_in=100 %.4g (paired difference %.2g +- %.2g SE, "
              "T_in=100 lower in %d of %zu trials; best/initial mean exploitability "
              "%.3f vs %.3f)\n",
              c_ok ? "PASS" : "FAIL", v10, v100, dm, dse, lower, diff.size(),
              b10, b100);
  return {a_ok && b_ok && c_ok, "see AC8a/AC8b/AC8c"};
}

// Calculators against formulas evaluated here.
Outcome Ac9() {
  std::mt19937_64 rng(1009);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  auto rel = [&](double got, double want) {
    const double e = std::abs(got - want) / std::max(std::abs(want), 1e-300);
    worst = std::max(worst, e);
  };
  for (int k = 0; k < 10; ++k) {
    const int S = 1 + k % 4, A = 2 + k % 3, B = 2 + (k + 1) % 3;
    const double gamma = 0.2 + 0.7 * u(rng);
    const GameModel m = RandomModel(9100 + k, S, A, B, gamma);
    const double w = 0.5 + u(rng);
    std::vector<double> r = RandomVector(rng, S * A * B);
    double rn = 0.0;
    for (double v : r) rn += v * v;
    rn = std::sqrt(rn);
    const UtilitySpec spec = UtilitySpec::Sum(
        {UtilitySpec::Linear(TermSide::kJoint, r),
         UtilitySpec::NegSqNorm(Side::kMax, w)});
    const double mu = 0.01 + 0.2 * u(rng);
    const double rho = m.min_initial_mass(), om = 1.0 - gamma;
    const double N = A + B, sS = S;

    const OccupancyConstants oc = ComputeOccupancyConstants(m);
    const double L_lam = std::sqrt(sS) * N / (om * om);
    const double l_lam = 2.0 * gamma * std::sqrt(sS) * std::pow(N, 1.5) /
                         (om * om * om);
    rel(oc.lip_lambda, L_lam);
    rel(oc.smooth_lambda, l_lam);
    rel(oc.lip_lambda_inverse, 2.0 / (rho * om));

    // Concave regime: F^mu = F - (mu/2)||lambda_2||^2.
    const ModuliReport c =
        ComputeModuli(m, spec, mu, ConcavityRegime::kConcave);
    const double LF = rn + w * std::sqrt(2.0) + mu, lF = w + mu;
    rel(c.lip_F, LF);
    rel(c.smooth_F, lF);
    rel(c.lip_U, LF * L_lam);
    rel(c.smooth_U, lF * l_lam);
    const double l = lF * l_lam * l_lam * L_lam;
    rel(c.smooth, l);
    const double qg = rho * rho * om * om * mu / 4.0;
    const double pl = std::pow(rho, 4) * std::pow(om, 12) * mu * mu /
                      (4.0 * lF * gamma * gamma * std::pow(sS, 1.5) *
                       std::pow(N, 4));
    rel(c.mu_qg, qg);
    rel(c.mu_pl, pl);
    const double kappa = l / std::sqrt(qg * pl);
    rel(c.kappa, kappa);
    rel(c.smooth_phi, l * (1.0 + kappa));

    // Strongly concave regime.
    const ModuliReport s =
        ComputeModuli(m, spec, 0.0, ConcavityRegime::kStronglyConcave);
    const double qg_s = rho * rho * om * om * w / 4.0;
    const double pl_s = std::pow(rho, 4) * std::pow(om, 7) * w * w /
                        (4.0 * w * gamma * std::sqrt(sS) * std::pow(N, 1.5));
    rel(s.mu_qg, qg_s);
    rel(s.mu_pl, pl_s);
    rel(s.kappa, w * l_lam / std::sqrt(qg_s * pl_s));
    rel(s.grad_dominance, om * rho / (2.0 * std::sqrt(2.0)));

    // Step sizes.
    TuneConstants tc;
    tc.smooth = 1.0 + 10.0 * u(rng);
    tc.kappa = 1.0 + 50.0 * u(rng);
    tc.mu_x = 0.01 + u(rng);
    tc.mu_y = 0.01 + u(rng);
    tc.lipschitz = 1.0 + u(rng);
    tc.diam_x = tc.diam_y = 1.0;
    tc.sigma2_x = tc.sigma2_y = 0.0;
    tc.epsilon = 0.01;
    const double lt = *tc.smooth, kt = *tc.kappa, my = *tc.mu_y;
    const SaddleTuning d7 = Tune(TuneRegime::kNcPplAltGda, tc);
    rel(d7.tau_min, 1.0 / (500.0 * lt * kt * kt));
    rel(d7.tau_max, 1.0 / (5.0 * lt));
    const SaddleTuning d8 = Tune(TuneRegime::kPplPplAltGda, tc);
    rel(d8.tau_min, my * my / (160.0 * lt * lt * lt));
    rel(d8.tau_max, 1.0 / (5.0 * lt));
    const SaddleTuning gd = Tune(TuneRegime::kNcPplGdmax, tc);
    rel(gd.tau_min, 1.0 / (5.0 * lt * (1.0 + kt)));
    rel(gd.tau_max, 1.0 / lt);
  }
  return {worst <= 1e-12,
          Fmt("10 constant sets, max relative error %.2e", worst)};
}

std::string Slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome Ac10() {
  namespace fs = std::filesystem;
  const fs::path dir =
      fs::temp_directory_path() / ("cmg_acceptance_" + std::to_string(getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const nlohmann::json doc = {
      {"game", {{"name", "iterated_rpsd"}, {"gamma", 0.9}}},
      {"solver",
       {{"algorithm", "alt_pgda"},
        {"gradient_mode", "stochastic"},
        {"outer_iters", 200},
        {"eval_cadence", 20},
        {"batch_min", 32},
        {"batch_max", 32},
        {"horizon", 16},
        {"init", "dirichlet"}}},
      {"trials", 3},
      {"mu_grid", {0.01, 0.1}},
      {"master_seed", 2026}};
  std::ofstream(dir / "exp.json") << doc.dump(2);
  int status[2];
  for (int k = 0; k < 2; ++k) {
    const std::string cmd = std::string(CMG_SOLVE_BIN) + " run --config " +
                            (dir / "exp.json").string() + " --jobs " +
                            std::to_string(k + 1) + " --out " +
                            (dir / std::to_string(k)).string() +
                            " > /dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    status[k] = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  }
  int files = 0, differ = 0;
  if (status[0] == 0 && status[1] == 0) {
    for (const auto& e : fs::directory_iterator(dir / "0")) {
      if (e.path().extension() != ".csv") continue;
      ++files;
      if (Slurp(e.path()) != Slurp(dir / "1" / e.path().filename())) ++differ;
    }
  }
  fs::remove_all(dir);
  return {status[0] == 0 && status[1] == 0 && files == 7 && differ == 0,
          Fmt("exit codes %d/%d, %d CSV files compared, %d differ", status[0],
              status[1], files, differ)};
}

}  // namespace
}  // namespace cmg

int main(int argc, char** argv) {
  using Check = std::function<cmg::Outcome()>;
  const std::vector<std::pair<std::string, Check>> all = {
      {"AC1", cmg::Ac1}, {"AC2", cmg::Ac2}, {"AC3", cmg::Ac3},
      {"AC4", cmg::Ac4}, {"AC5", cmg::Ac5}, {"AC6", cmg::Ac6},
      {"AC7", cmg::Ac7}, {"AC8", cmg::Ac8}, {"AC9", cmg::Ac9},
      {"AC10", cmg::Ac10}};
  std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [name, check] : all) {
    if (!only.empty() && !only.count(name)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    cmg::Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
    if (!o.pass) ++failed;
    if (name == "AC8") {
      std::printf("AC8 %s  (%.1f s)\n", o.pass ? "PASS" : "FAIL", secs);
    } else {
      std::printf("%s %s  %s  (%.1f s)\n", name.c_str(),
                  o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    }
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
