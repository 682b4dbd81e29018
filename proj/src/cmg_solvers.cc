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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>

#include "cmg/errors.h"
#include "cmg/occupancy.h"
#include "cmg/rng.h"
#include "cmg/sampling.h"

namespace cmg {
namespace {

constexpr uint64_t kInitStream = 0x1417a2c3ULL;
constexpr uint64_t kStartStream = 0x5b2e91f7ULL;

std::string Fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Policy DirichletPolicy(int n_states, int n_actions, uint64_t key) {
  Policy p{Eigen::MatrixXd(n_states, n_actions)};
  for (int s = 0; s < n_states; ++s) {
    RngStream rng(key, 0, static_cast<uint64_t>(s));
    for (int a = 0; a < n_actions; ++a) {
      p.table(s, a) = -std::log1p(-rng.Uniform());
    }
    p.table.row(s) /= p.table.row(s).sum();
  }
  return p;
}

PolicyPair WithPolicy(const PolicyPair& pair, Side side, const Policy& p) {
  PolicyPair out = pair;
  out.policy(side) = p;
  out.explore_min = 0.0;
  out.explore_max = 0.0;
  return out;
}

// Induced single-agent MDP of `side` against the fixed opponent, solved by
// policy iteration.
BestResponse ExactResponse(const GameModel& model, const UtilitySpec& spec,
                           const PolicyPair& pair, Side side, double tol) {
  const int S = model.n_states();
  const int A = model.n_actions_min();
  const int B = model.n_actions_max();
  const int n = model.n_actions(side);
  const double gamma = model.discount();
  const std::vector<double> G = spec.JointGradient(ExactOccupancy(model, pair));
  const Policy& opp = pair.policy(Opponent(side));
  const Eigen::MatrixXd z = SideReward(G, opp, side, S, A, B);
  // kernel[s * n + c] is the next-state row of (s, c).
  std::vector<Eigen::RowVectorXd> kernel(static_cast<size_t>(S) * n,
                                         Eigen::RowVectorXd::Zero(S));
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      for (int b = 0; b < B; ++b) {
        const int c = side == Side::kMin ? a : b;
        const double w = side == Side::kMin ? opp(s, b) : opp(s, a);
        if (w == 0.0) continue;
        const double* row = model.Slice(s, a, b);
        for (int k = 0; k < S; ++k) kernel[s * n + c](k) += w * row[k];
      }
    }
  }
  const double sign = side == Side::kMax ? 1.0 : -1.0;
  auto q = [&](int s, int c, const Eigen::VectorXd& v) {
    return z(s, c) + gamma * kernel[s * n + c].dot(v);
  };
  std::vector<int> act(S, 0);
  for (int s = 0; s < S; ++s) {
    for (int c = 1; c < n; ++c) {
      if (sign * z(s, c) > sign * z(s, act[s])) act[s] = c;
    }
  }
  Eigen::VectorXd v(S);
  BestResponse br;
  for (int it = 0; it < 10000; ++it) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(S, S);
    Eigen::VectorXd r(S);
    for (int s = 0; s < S; ++s) {
      M.row(s) -= gamma * kernel[s * n + act[s]];
      r(s) = z(s, act[s]);
    }
    v = M.partialPivLu().solve(r);
    ++br.iters;
    bool changed = false;
    for (int s = 0; s < S; ++s) {
      const double cur = sign * q(s, act[s], v);
      int best = act[s];
      double best_q = cur;
      for (int c = 0; c < n; ++c) {
        const double qc = sign * q(s, c, v);
        if (qc > best_q + 1e-13 * (1.0 + std::abs(cur))) best = c, best_q = qc;
      }
      if (best != act[s]) act[s] = best, changed = true;
    }
    if (!changed) break;
  }
  double residual = 0.0;
  for (int s = 0; s < S; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < n; ++c) best = std::max(best, sign * q(s, c, v));
    residual = std::max(residual, std::abs(best - sign * v(s)));
  }
  br.policy = Policy{Eigen::MatrixXd::Zero(S, n)};
  for (int s = 0; s < S; ++s) br.policy.table(s, act[s]) = 1.0;
  br.value = (1.0 - gamma) * model.initial_dist().dot(v);
  // ||V* - V|| <= res / (1 - gamma); U carries a (1 - gamma) factor.
  br.residual = residual;
  br.converged = residual <= tol;
  br.certificate = br.converged ? BrCertificate::kExact
                                : BrCertificate::kHeuristic;
  return br;
}

BestResponse GradientResponse(const GameModel& model, const UtilitySpec& spec,
                              const PolicyPair& pair, Side side,
                              const BestResponseOptions& opt) {
  const int S = model.n_states();
  const int n = model.n_actions(side);
  const double sign = side == Side::kMax ? 1.0 : -1.0;
  BestResponse best;
  best.value = -sign * std::numeric_limits<double>::infinity();
  for (int k = 0; k < std::max(1, opt.starts); ++k) {
    Policy p = k == 0 ? Policy::Uniform(S, n)
                      : DirichletPolicy(S, n, HashSeed(opt.seed ^ kStartStream,
                                                       static_cast<uint64_t>(k)));
    PolicyPair cur = WithPolicy(pair, side, p);
    double f = EvalUtilityReg(model, spec, cur, opt.mu_reg);
    double step = 1.0;
    double mapping = std::numeric_limits<double>::infinity();
    long long it = 0;
    for (; it < opt.max_iters; ++it) {
      const Eigen::MatrixXd g =
          sign * ExactGrad(model, spec, cur, side, opt.mu_reg);
      mapping = (ProjectRows(p.table + g).table - p.table).norm();
      if (mapping <= opt.tolerance) break;
      bool accepted = false;
      const double step0 = step;
      while (step > 1e-12) {
        Policy trial = ProjectRows(p.table + step * g);
        PolicyPair cand = WithPolicy(pair, side, trial);
        const double ft = EvalUtilityReg(model, spec, cand, opt.mu_reg);
        const double lin = (g.array() * (trial.table - p.table).array()).sum();
        if (sign * (ft - f) >= 1e-4 * lin && lin > 0.0) {
          p = std::move(trial);
          cur = std::move(cand);
          f = ft;
          accepted = true;
          step = std::min(step * 2.0, 1e6);
          break;
        }
        step *= 0.5;
      }
      // Near the optimum the change in f drops below rounding; fall back to
      // accepting a step that shrinks the gradient mapping by at least 1%.
      for (double s2 = step0; !accepted && s2 > 1e-12; s2 *= 0.5) {
        Policy trial = ProjectRows(p.table + s2 * g);
        PolicyPair cand = WithPolicy(pair, side, trial);
        const Eigen::MatrixXd gt =
            sign * ExactGrad(model, spec, cand, side, opt.mu_reg);
        if ((ProjectRows(trial.table + gt).table - trial.table).norm() <
            0.99 * mapping) {
          p = std::move(trial);
          cur = std::move(cand);
          f = EvalUtilityReg(model, spec, cur, opt.mu_reg);
          accepted = true;
          step = s2;
        }
      }
      if (!accepted) break;
    }
    best.iters += it;
    if (sign * f > sign * best.value) {
      best.value = f;
      best.policy = p;
      best.residual = mapping;
      best.converged = mapping <= opt.tolerance;
    }
  }
  best.certificate = BrCertificate::kHeuristic;
  return best;
}

double ParseNonNegative(const nlohmann::json& v, const char* key) {
  if (!v.is_number()) throw ConfigError(std::string("solver.") + key +
                                        ": expected a number");
  return v.get<double>();
}

}  // namespace

const char kReportCsvHeader[] =
    "iter,u_value,exploitability,gap_min_side,gap_max_side,d_x_proxy,"
    "d_y_proxy,br_certificate";

void SolverConfig::Validate() const {
  auto fail = [](const std::string& m) { throw ParameterError("solver: " + m); };
  if (!(tau_min > 0.0) || !(tau_max > 0.0)) fail("step sizes must be > 0");
  if (outer_iters < 1) fail("outer_iters must be >= 1");
  if (algorithm == Algorithm::kNestPg && inner_iters < 1) {
    fail("inner_iters must be >= 1");
  }
  if (mu_reg.has_value() && !(*mu_reg >= 0.0)) fail("mu_reg must be >= 0");
  if (gradient_mode == GradientMode::kStochastic &&
      (batch_min < 1 || batch_max < 1 || horizon < 1)) {
    fail("stochastic gradients need batch sizes and horizon >= 1");
  }
  if (!(explore_min >= 0.0 && explore_min < 1.0) ||
      !(explore_max >= 0.0 && explore_max < 1.0)) {
    fail("exploration must lie in [0, 1)");
  }
  if (eval_cadence < 1) fail("eval_cadence must be >= 1");
  if (!(br_tolerance > 0.0)) fail("br_tolerance must be > 0");
}

double SolverConfig::EffectiveMu(const UtilitySpec& spec) const {
  if (mu_reg.has_value()) return *mu_reg;
  return spec.StrongConcavity(Side::kMax) > 0.0 ? 0.0 : 0.05;
}

std::pair<double, double> SolverConfig::SideMus(const UtilitySpec& spec) const {
  const double mu = EffectiveMu(spec);
  switch (regularized_side) {
    case RegularizedSide::kBoth:
      return {mu, mu};
    case RegularizedSide::kMinOnly:
      return {mu, 0.0};
    case RegularizedSide::kMaxOnly:
      return {0.0, mu};
    case RegularizedSide::kPerPaper:
      break;
  }
  return algorithm == Algorithm::kNestPg ? std::make_pair(0.0, mu)
                                         : std::make_pair(mu, 0.0);
}

std::string AlgorithmName(Algorithm a) {
  return a == Algorithm::kNestPg ? "nest_pg" : "alt_pgda";
}

Algorithm ParseAlgorithm(const std::string& name) {
  if (name == "nest_pg") return Algorithm::kNestPg;
  if (name == "alt_pgda") return Algorithm::kAltPgda;
  throw ConfigError("solver.algorithm: unknown algorithm '" + name + "'");
}

std::string RegularizedSideName(RegularizedSide r) {
  switch (r) {
    case RegularizedSide::kPerPaper:
      return "per_paper";
    case RegularizedSide::kBoth:
      return "both";
    case RegularizedSide::kMinOnly:
      return "min_only";
    case RegularizedSide::kMaxOnly:
      return "max_only";
  }
  return "per_paper";
}

RegularizedSide ParseRegularizedSide(const std::string& name) {
  for (RegularizedSide r :
       {RegularizedSide::kPerPaper, RegularizedSide::kBoth,
        RegularizedSide::kMinOnly, RegularizedSide::kMaxOnly}) {
    if (RegularizedSideName(r) == name) return r;
  }
  throw ConfigError("solver.regularized_side: unknown value '" + name + "'");
}

nlohmann::json SolverConfigToJson(const SolverConfig& c) {
  nlohmann::json j;
  j["algorithm"] = AlgorithmName(c.algorithm);
  if (c.mu_reg.has_value()) j["mu_reg"] = *c.mu_reg;
  j["tau_min"] = c.tau_min;
  j["tau_max"] = c.tau_max;
  j["outer_iters"] = c.outer_iters;
  j["inner_iters"] = c.inner_iters;
  j["batch_min"] = c.batch_min;
  j["batch_max"] = c.batch_max;
  j["horizon"] = c.horizon;
  j["explore_min"] = c.explore_min;
  j["explore_max"] = c.explore_max;
  j["gradient_mode"] =
      c.gradient_mode == GradientMode::kExact ? "exact" : "stochastic";
  j["regularized_side"] = RegularizedSideName(c.regularized_side);
  j["seed"] = c.seed;
  j["eval_cadence"] = c.eval_cadence;
  j["init"] = c.init == InitMode::kUniform ? "uniform" : "dirichlet";
  j["br_tolerance"] = c.br_tolerance;
  return j;
}

SolverConfig SolverConfigFromJson(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("solver: expected an object");
  SolverConfig c;
  try {
    for (const auto& [key, v] : doc.items()) {
      if (key == "algorithm") {
        c.algorithm = ParseAlgorithm(v.get<std::string>());
      } else if (key == "mu_reg") {
        if (!v.is_null()) c.mu_reg = ParseNonNegative(v, "mu_reg");
      } else if (key == "tau_min") {
        c.tau_min = ParseNonNegative(v, "tau_min");
      } else if (key == "tau_max") {
        c.tau_max = ParseNonNegative(v, "tau_max");
      } else if (key == "outer_iters") {
        c.outer_iters = v.get<long long>();
      } else if (key == "inner_iters") {
        c.inner_iters = v.get<long long>();
      } else if (key == "batch_min") {
        c.batch_min = v.get<int>();
      } else if (key == "batch_max") {
        c.batch_max = v.get<int>();
      } else if (key == "horizon") {
        c.horizon = v.get<int>();
      } else if (key == "explore_min") {
        c.explore_min = ParseNonNegative(v, "explore_min");
      } else if (key == "explore_max") {
        c.explore_max = ParseNonNegative(v, "explore_max");
      } else if (key == "gradient_mode") {
        const std::string m = v.get<std::string>();
        if (m == "exact") {
          c.gradient_mode = GradientMode::kExact;
        } else if (m == "stochastic") {
          c.gradient_mode = GradientMode::kStochastic;
        } else {
          throw ConfigError("solver.gradient_mode: unknown value '" + m + "'");
        }
      } else if (key == "regularized_side") {
        c.regularized_side = ParseRegularizedSide(v.get<std::string>());
      } else if (key == "seed") {
        c.seed = v.get<uint64_t>();
      } else if (key == "eval_cadence") {
        c.eval_cadence = v.get<long long>();
      } else if (key == "init") {
        const std::string m = v.get<std::string>();
        if (m == "uniform") {
          c.init = InitMode::kUniform;
        } else if (m == "dirichlet") {
          c.init = InitMode::kDirichlet;
        } else {
          throw ConfigError("solver.init: unknown value '" + m + "'");
        }
      } else if (key == "br_tolerance") {
        c.br_tolerance = ParseNonNegative(v, "br_tolerance");
      } else {
        throw ConfigError("solver." + key + ": unknown key");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("solver: ") + e.what());
  }
  return c;
}

std::string CertificateName(BrCertificate c) {
  return c == BrCertificate::kExact ? "exact" : "heuristic";
}

BestResponse BestResponseValue(const GameModel& model, const UtilitySpec& spec,
                               const PolicyPair& pair, Side side,
                               const BestResponseOptions& opt) {
  if (!(opt.tolerance > 0.0)) {
    throw ParameterError("best_response: tolerance must be > 0");
  }
  CheckDimensions(model, pair);
  const PolicyPair raw = WithPolicy(pair, side, pair.policy(side));
  if (spec.IsLinear() && opt.mu_reg == 0.0) {
    return ExactResponse(model, spec, raw, side, opt.tolerance);
  }
  return GradientResponse(model, spec, raw, side, opt);
}

Exploitability ComputeExploitability(const GameModel& model,
                                     const UtilitySpec& spec,
                                     const PolicyPair& pair,
                                     double tolerance) {
  BestResponseOptions opt;
  opt.tolerance = tolerance;
  Exploitability e;
  e.u_value = EvalUtility(model, spec, pair);
  const BestResponse up = BestResponseValue(model, spec, pair, Side::kMax, opt);
  const BestResponse down =
      BestResponseValue(model, spec, pair, Side::kMin, opt);
  e.gap_max_side = up.value - e.u_value;
  e.gap_min_side = e.u_value - down.value;
  e.gap = up.value - down.value;
  const bool exact = up.certificate == BrCertificate::kExact &&
                     down.certificate == BrCertificate::kExact;
  e.certificate = exact ? BrCertificate::kExact : BrCertificate::kHeuristic;
  e.lower_bound = !exact;
  return e;
}

int SelectBestIterate(const std::vector<Checkpoint>& checkpoints) {
  if (checkpoints.empty()) {
    throw PreconditionError("select_best_iterate: no checkpoints");
  }
  bool any_positive = false;
  for (const Checkpoint& c : checkpoints) any_positive |= c.iter >= 1;
  int best = -1;
  for (int i = 0; i < static_cast<int>(checkpoints.size()); ++i) {
    if (any_positive && checkpoints[i].iter < 1) continue;
    if (best < 0 || checkpoints[i].expl.gap <= checkpoints[best].expl.gap) {
      best = i;
    }
  }
  return best;
}

void SolverReport::WriteCsv(std::ostream& out) const {
  out << kReportCsvHeader << "\n";
  for (const Checkpoint& c : checkpoints) {
    out << c.iter << ',' << Fmt(c.expl.u_value) << ',' << Fmt(c.expl.gap)
        << ',' << Fmt(c.expl.gap_min_side) << ',' << Fmt(c.expl.gap_max_side)
        << ',' << Fmt(c.d_x_proxy) << ',' << Fmt(c.d_y_proxy) << ','
        << CertificateName(c.expl.certificate) << "\n";
  }
}

nlohmann::json SolverReport::Summary() const {
  nlohmann::json j;
  j["t_star"] = best_iter;
  j["best_exploitability"] = checkpoints.at(best_index).expl.gap;
  j["final_exploitability"] = checkpoints.back().expl.gap;
  j["initial_exploitability"] = checkpoints.front().expl.gap;
  j["mu_reg"] = mu_reg;
  j["aborted"] = trace.aborted;
  j["config"] = SolverConfigToJson(config);
  return j;
}

PolicyPair InitialPair(const GameModel& model, const SolverConfig& config) {
  PolicyPair pair;
  const int S = model.n_states();
  if (config.init == InitMode::kUniform) {
    pair.min_policy = Policy::Uniform(S, model.n_actions_min());
    pair.max_policy = Policy::Uniform(S, model.n_actions_max());
  } else {
    const uint64_t key = HashSeed(config.seed, kInitStream);
    pair.min_policy =
        DirichletPolicy(S, model.n_actions_min(), HashSeed(key, 0));
    pair.max_policy =
        DirichletPolicy(S, model.n_actions_max(), HashSeed(key, 1));
  }
  pair.explore_min = config.explore_min;
  pair.explore_max = config.explore_max;
  return pair;
}

OracleSpec MakeGameOracle(const GameModel& model, const UtilitySpec& spec,
                          const SolverConfig& config) {
  auto m = std::make_shared<const GameModel>(model);
  auto u = std::make_shared<const UtilitySpec>(spec);
  const auto [mu_min, mu_max] = config.SideMus(spec);
  const int S = model.n_states();
  const int A = model.n_actions_min();
  const int B = model.n_actions_max();
  const double ex = config.explore_min;
  const double ey = config.explore_max;
  auto make_pair = [=](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    PolicyPair p;
    p.min_policy = Policy{Unflatten(x, S, A)};
    p.max_policy = Policy{Unflatten(y, S, B)};
    p.explore_min = ex;
    p.explore_max = ey;
    return p;
  };
  auto side_grad = [=](Side side, double mu, int batch) {
    if (config.gradient_mode == GradientMode::kExact) {
      return std::function<OracleSample(const Eigen::VectorXd&,
                                        const Eigen::VectorXd&)>(
          [=](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
            const PolicyPair pair = make_pair(x, y);
            const double scale = 1.0 - pair.explore(side);
            return OracleSample{
                Flatten(scale * ExactGrad(*m, *u, Played(pair), side, mu)),
                0.0};
          });
    }
    auto counter = std::make_shared<uint64_t>(0);
    const uint64_t seed = config.seed;
    const int horizon = config.horizon;
    return std::function<OracleSample(const Eigen::VectorXd&,
                                      const Eigen::VectorXd&)>(
        [=](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
          BatchConfig bc;
          bc.batch_size = batch;
          bc.horizon = horizon;
          bc.seed = seed;
          bc.iteration = (*counter)++;
          bc.normalized = true;
          bc.mu_reg = mu;
          const GradEstimate g = BatchGrad(*m, *u, make_pair(x, y), side, bc);
          return OracleSample{Flatten(g.gradient), g.empirical_second_moment};
        });
  };
  OracleSpec o;
  o.grad_min = side_grad(Side::kMin, mu_min, config.batch_min);
  o.grad_max = side_grad(Side::kMax, mu_max, config.batch_max);
  return o;
}

namespace {

// Orthonormal basis of {v : each block of size n sums to zero}.
Eigen::MatrixXd TangentBasis(int blocks, int n) {
  Eigen::MatrixXd local(n, std::max(n - 1, 0));
  if (n > 1) {
    Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(n, n - 1);
    for (int k = 0; k < n - 1; ++k) raw(k, k) = 1.0, raw(n - 1, k) = -1.0;
    local = raw.householderQr().householderQ() *
            Eigen::MatrixXd::Identity(n, n - 1);
  }
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(blocks * n, blocks * (n - 1));
  for (int b = 0; b < blocks; ++b) {
    T.block(b * n, b * (n - 1), n, n - 1) = local;
  }
  return T;
}

}  // namespace

LocalModuli EstimateLocalModuli(const GameModel& model, const UtilitySpec& spec,
                                double mu_reg, int samples, uint64_t seed) {
  if (samples < 1) throw ParameterError("local moduli: samples must be >= 1");
  const int S = model.n_states();
  const int A = model.n_actions_min();
  const int B = model.n_actions_max();
  const Eigen::MatrixXd Tx = TangentBasis(S, A);
  const Eigen::MatrixXd Ty = TangentBasis(S, B);
  const int nx = static_cast<int>(Tx.cols());
  const int ny = static_cast<int>(Ty.cols());
  const int dim = nx + ny;
  LocalModuli out;
  out.samples = samples;
  out.mu_min = std::numeric_limits<double>::infinity();
  out.mu_max = std::numeric_limits<double>::infinity();
  constexpr double kStep = 1e-5;
  for (int k = 0; k < samples; ++k) {
    PolicyPair p;
    const uint64_t key = HashSeed(seed, static_cast<uint64_t>(k));
    p.min_policy = DirichletPolicy(S, A, HashSeed(key, 0));
    p.max_policy = DirichletPolicy(S, B, HashSeed(key, 1));
    p.min_policy.table = 0.9 * p.min_policy.table.array() + 0.1 / A;
    p.max_policy.table = 0.9 * p.max_policy.table.array() + 0.1 / B;
    auto grad = [&](const PolicyPair& q) {
      Eigen::VectorXd g(S * A + S * B);
      g << Flatten(ExactGrad(model, spec, q, Side::kMin, mu_reg)),
          Flatten(ExactGrad(model, spec, q, Side::kMax, mu_reg));
      return g;
    };
    Eigen::MatrixXd H(dim, dim);
    for (int j = 0; j < dim; ++j) {
      const bool on_x = j < nx;
      const Eigen::VectorXd dir = on_x ? Tx.col(j) : Ty.col(j - nx);
      PolicyPair plus = p, minus = p;
      Policy& pp = plus.policy(on_x ? Side::kMin : Side::kMax);
      Policy& pm = minus.policy(on_x ? Side::kMin : Side::kMax);
      const int n = on_x ? A : B;
      pp.table += kStep * Unflatten(dir, S, n);
      pm.table -= kStep * Unflatten(dir, S, n);
      const Eigen::VectorXd dg = (grad(plus) - grad(minus)) / (2.0 * kStep);
      H.block(0, j, nx, 1) = Tx.transpose() * dg.head(S * A);
      H.block(nx, j, ny, 1) = Ty.transpose() * dg.tail(S * B);
    }
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> full(H);
    out.smooth = std::max(out.smooth, full.eigenvalues().cwiseAbs().maxCoeff());
    if (nx > 0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> hx(H.topLeftCorner(nx, nx));
      out.mu_min = std::min(out.mu_min, hx.eigenvalues().minCoeff());
    }
    if (ny > 0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> hy(
          -H.bottomRightCorner(ny, ny));
      out.mu_max = std::min(out.mu_max, hy.eigenvalues().minCoeff());
    }
  }
  out.mu_min = std::isfinite(out.mu_min) ? std::max(0.0, out.mu_min) : 0.0;
  out.mu_max = std::isfinite(out.mu_max) ? std::max(0.0, out.mu_max) : 0.0;
  return out;
}

namespace {

SolverReport Solve(const GameModel& model, const UtilitySpec& spec,
                   const SolverConfig& config, bool nested) {
  const auto start = std::chrono::steady_clock::now();
  config.Validate();
  spec.CheckDimensions(model.n_states(), model.n_actions_min(),
                       model.n_actions_max());
  SolverReport report;
  report.config = config;
  report.mu_reg = config.EffectiveMu(spec);
  const int S = model.n_states();
  const int A = model.n_actions_min();
  const int B = model.n_actions_max();
  const OracleSpec oracle = MakeGameOracle(model, spec, config);
  const Projector px = SimplexProductProjector(std::vector<int>(S, A));
  const Projector py = SimplexProductProjector(std::vector<int>(S, B));
  const PolicyPair init = InitialPair(model, config);

  auto evaluate = [&](long long iter, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& y) {
    Checkpoint c;
    c.iter = iter;
    c.min_policy = Policy{Unflatten(x, S, A)};
    c.max_policy = Policy{Unflatten(y, S, B)};
    PolicyPair p{c.min_policy, c.max_policy, 0.0, 0.0};
    c.expl = ComputeExploitability(model, spec, p, config.br_tolerance);
    report.checkpoints.push_back(std::move(c));
  };
  auto due = [&](long long t) {
    return t % config.eval_cadence == 0 || t == config.outer_iters;
  };

  const Eigen::VectorXd x0 = Flatten(init.min_policy.table);
  const Eigen::VectorXd y0 = Flatten(init.max_policy.table);
  evaluate(0, x0, y0);

  SaddleTuning tuning;
  tuning.tau_min = config.tau_min;
  tuning.tau_max = config.tau_max;
  tuning.batch_min = config.batch_min;
  tuning.batch_max = config.batch_max;
  tuning.iters = config.outer_iters;
  tuning.inner_iters = config.inner_iters;
  RunOptions opt;
  opt.snapshot_every = 0;

  if (nested) {
    // Checkpoint t pairs x_t with y_{t+1}, the inner solve started from x_t.
    const InnerSolver inner = ProjectedAscentSolver(
        oracle, py, config.tau_max, config.inner_iters, 0.0, 0.0, 1.0);
    std::optional<std::pair<long long, Eigen::VectorXd>> pending;
    opt.on_iterate = [&](long long t, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& y) {
      if (pending) {
        evaluate(pending->first, pending->second, y);
        pending.reset();
      }
      if (due(t)) pending.emplace(t, x);
    };
    report.trace = Gdmax(oracle, inner, tuning, px, py, x0, y0, opt);
    if (pending) {
      const Eigen::VectorXd y_next = inner(report.trace.x, report.trace.y).y;
      evaluate(pending->first, pending->second, y_next);
    }
  } else {
    opt.on_iterate = [&](long long t, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& y) {
      if (due(t)) evaluate(t, x, y);
    };
    report.trace = AltGda(oracle, tuning, px, py, x0, y0, opt);
  }

  for (Checkpoint& c : report.checkpoints) {
    if (c.iter < 1) continue;
    const size_t k = static_cast<size_t>(c.iter - 1);
    if (k < report.trace.records.size()) {
      c.d_x_proxy = report.trace.records[k].d_x_proxy;
      c.d_y_proxy = report.trace.records[k].d_y_proxy;
    }
  }
  report.best_index = SelectBestIterate(report.checkpoints);
  const Checkpoint& best = report.checkpoints[report.best_index];
  report.best_iter = best.iter;
  report.output = PolicyPair{best.min_policy, best.max_policy,
                             config.explore_min, config.explore_max};
  report.wall_seconds = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
  return report;
}

}  // namespace

SolverReport NestPg(const GameModel& model, const UtilitySpec& spec,
                    const SolverConfig& config) {
  SolverConfig c = config;
  c.algorithm = Algorithm::kNestPg;
  return Solve(model, spec, c, true);
}

SolverReport AltPgda(const GameModel& model, const UtilitySpec& spec,
                     const SolverConfig& config) {
  SolverConfig c = config;
  c.algorithm = Algorithm::kAltPgda;
  return Solve(model, spec, c, false);
}

SolverReport RunSolver(const GameModel& model, const UtilitySpec& spec,
                       const SolverConfig& config) {
  return config.algorithm == Algorithm::kNestPg ? NestPg(model, spec, config)
                                                : AltPgda(model, spec, config);
}

}  // namespace cmg
