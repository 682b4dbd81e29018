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

#include "cmg/bench.h"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "cmg/errors.h"
#include "cmg/occupancy.h"
#include "cmg/rng.h"
#include "cmg/sampling.h"

namespace cmg {
namespace {

std::string Fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

nlohmann::json Number(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

const nlohmann::json& Presets() {
  static const nlohmann::json* presets = [] {
    const nlohmann::json rpsd = {
        {"name", "iterated_rpsd"},
        {"gamma", 0.9},
        {"params", {{"dummy_penalty", kDefaultDummyPenalty}}}};
    auto solver = [](const std::string& algorithm, long long inner) {
      nlohmann::json s = {{"algorithm", algorithm},
                          {"tau_min", 0.1},
                          {"tau_max", 0.1},
                          {"outer_iters", 5000},
                          {"eval_cadence", 25},
                          {"gradient_mode", "exact"},
                          {"init", "dirichlet"}};
      if (inner > 0) s["inner_iters"] = inner;
      return s;
    };
    auto* p = new nlohmann::json{
        {"fig1_altpgda",
         {{"game", rpsd},
          {"solver", solver("alt_pgda", 0)},
          {"trials", 20},
          {"mu_grid", {0.001, 0.01, 0.1}}}},
        {"fig1_nestpg_10",
         {{"game", rpsd},
          {"solver", solver("nest_pg", 10)},
          {"trials", 20},
          {"mu_grid", {0.01}}}},
        {"fig1_nestpg_100",
         {{"game", rpsd},
          {"solver", solver("nest_pg", 100)},
          {"trials", 20},
          {"mu_grid", {0.01}}}}};
    return p;
  }();
  return *presets;
}

struct Stats {
  double mean = 0.0;
  double stderr_ = 0.0;
  int n = 0;
};

Stats Summarize(const std::vector<double>& v) {
  Stats s;
  s.n = static_cast<int>(v.size());
  if (s.n == 0) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / s.n;
  if (s.n > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.stderr_ = std::sqrt(ss / (s.n - 1) / s.n);
  }
  return s;
}

// Per-checkpoint exploitability across the trials of one mu; rows with
// missing trials (aborted runs) average what is present.
std::vector<std::pair<long long, std::vector<double>>> Columns(
    const ExperimentResult& res, double mu) {
  std::vector<std::pair<long long, std::vector<double>>> cols;
  for (const TrialResult& t : res.trials) {
    if (t.mu != mu) continue;
    const auto& cps = t.report.checkpoints;
    for (size_t k = 0; k < cps.size(); ++k) {
      if (k >= cols.size()) cols.push_back({cps[k].iter, {}});
      cols[k].second.push_back(cps[k].expl.gap);
    }
  }
  return cols;
}

}  // namespace

std::vector<std::string> PresetNames() {
  std::vector<std::string> names;
  for (const auto& [k, v] : Presets().items()) names.push_back(k);
  return names;
}

nlohmann::json PresetJson(const std::string& name) {
  if (!Presets().contains(name)) {
    throw ConfigError("preset: unknown preset '" + name + "'");
  }
  return Presets().at(name);
}

ExperimentConfig ExperimentFromJson(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
  nlohmann::json merged = nlohmann::json::object();
  ExperimentConfig c;
  if (doc.contains("preset")) {
    c.preset = doc.at("preset").get<std::string>();
    merged = PresetJson(c.preset);
  }
  nlohmann::json patch = doc;
  patch.erase("preset");
  merged.merge_patch(patch);
  try {
    for (const auto& [key, v] : merged.items()) {
      if (key == "game") {
        c.game = v;
      } else if (key == "solver") {
        c.solver = SolverConfigFromJson(v);
      } else if (key == "trials") {
        c.trials = v.get<int>();
      } else if (key == "mu_grid") {
        c.mu_grid = v.get<std::vector<double>>();
      } else if (key == "output_path") {
        c.output_path = v.get<std::string>();
      } else if (key == "master_seed") {
        c.master_seed = v.get<uint64_t>();
      } else if (key == "tune_epsilon") {
        c.tune_epsilon = v.get<double>();
      } else {
        throw ConfigError(key + ": unknown key");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (c.game.is_null()) throw ConfigError("game: missing");
  if (c.trials < 1) throw ConfigError("trials: must be >= 1");
  for (double mu : c.mu_grid) {
    if (!(mu >= 0.0)) throw ConfigError("mu_grid: entries must be >= 0");
  }
  if (!(c.tune_epsilon > 0.0)) throw ConfigError("tune_epsilon: must be > 0");
  return c;
}

nlohmann::json ExperimentToJson(const ExperimentConfig& c) {
  nlohmann::json j;
  if (!c.preset.empty()) j["preset"] = c.preset;
  j["game"] = c.game;
  j["solver"] = SolverConfigToJson(c.solver);
  j["trials"] = c.trials;
  if (!c.mu_grid.empty()) j["mu_grid"] = c.mu_grid;
  j["output_path"] = c.output_path;
  j["master_seed"] = c.master_seed;
  j["tune_epsilon"] = c.tune_epsilon;
  return j;
}

ExperimentConfig LoadExperiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return ExperimentFromJson(doc);
}

bool ApplySeedOverride(ExperimentConfig& config) {
  const char* env = std::getenv("CMG_SOLVE_SEED");
  if (env == nullptr || *env == '\0') return false;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0') {
    throw ConfigError(std::string("CMG_SOLVE_SEED: not an integer: ") + env);
  }
  config.master_seed = v;
  return true;
}

Game ResolveGame(const ExperimentConfig& config) {
  Game g = GameFromJson(config.game);
  const ValidationReport v = ValidateModel(g.model);
  if (!v.empty()) throw ConfigError("game: " + v[0].message);
  g.spec.CheckDimensions(g.model.n_states(), g.model.n_actions_min(),
                         g.model.n_actions_max());
  config.solver.Validate();
  return g;
}

uint64_t TrialSeed(uint64_t master_seed, int trial) {
  return HashSeed(master_seed, static_cast<uint64_t>(trial));
}

ExperimentResult RunExperiment(const ExperimentConfig& config, int jobs) {
  const Game game = ResolveGame(config);
  ExperimentResult res;
  res.mus = config.mu_grid;
  if (res.mus.empty()) res.mus.push_back(config.solver.EffectiveMu(game.spec));
  const int n_mu = static_cast<int>(res.mus.size());
  res.trials.resize(static_cast<size_t>(n_mu) * config.trials);
  for (int m = 0; m < n_mu; ++m) {
    for (int t = 0; t < config.trials; ++t) {
      TrialResult& tr = res.trials[m * config.trials + t];
      tr.index = m * config.trials + t;
      tr.trial = t;
      tr.mu = res.mus[m];
      tr.seed = TrialSeed(config.master_seed, t);
    }
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (size_t i = next++; i < res.trials.size(); i = next++) {
      TrialResult& tr = res.trials[i];
      SolverConfig sc = config.solver;
      sc.mu_reg = tr.mu;
      sc.seed = tr.seed;
      try {
        tr.report = RunSolver(game.model, game.spec, sc);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int n_threads =
      std::max(1, std::min<int>(jobs, static_cast<int>(res.trials.size())));
  std::vector<std::thread> pool;
  for (int k = 1; k < n_threads; ++k) pool.emplace_back(worker);
  worker();
  for (std::thread& th : pool) th.join();
  if (error) std::rethrow_exception(error);
  for (const TrialResult& tr : res.trials) {
    if (tr.report.trace.aborted) res.all_completed = false;
  }
  return res;
}

void WriteAggregateCsv(const ExperimentResult& res, std::ostream& out) {
  out << "mu,iter,mean_exploitability,stderr_exploitability,n_trials\n";
  for (double mu : res.mus) {
    for (const auto& [iter, values] : Columns(res, mu)) {
      const Stats s = Summarize(values);
      out << Fmt(mu) << ',' << iter << ',' << Fmt(s.mean) << ','
          << Fmt(s.stderr_) << ',' << s.n << "\n";
    }
  }
}

nlohmann::json ExperimentSummary(const ExperimentConfig& config,
                                 const ExperimentResult& res) {
  nlohmann::json j;
  j["config"] = ExperimentToJson(config);
  j["all_completed"] = res.all_completed;
  nlohmann::json per_mu = nlohmann::json::array();
  for (double mu : res.mus) {
    const auto cols = Columns(res, mu);
    std::vector<double> finals, bests;
    for (const TrialResult& t : res.trials) {
      if (t.mu != mu) continue;
      finals.push_back(t.report.checkpoints.back().expl.gap);
      bests.push_back(t.report.checkpoints[t.report.best_index].expl.gap);
    }
    // Mean of the last 10% of checkpoints of the mean curve.
    const size_t n = cols.size();
    const size_t tail = std::max<size_t>(1, n / 10);
    double converged = 0.0;
    for (size_t k = n - tail; k < n; ++k) {
      converged += Summarize(cols[k].second).mean / tail;
    }
    const Stats f = Summarize(finals);
    const Stats b = Summarize(bests);
    per_mu.push_back({{"mu", mu},
                      {"n_trials", f.n},
                      {"initial_mean", Summarize(cols.front().second).mean},
                      {"final_mean", f.mean},
                      {"final_stderr", f.stderr_},
                      {"best_mean", b.mean},
                      {"best_stderr", b.stderr_},
                      {"converged_mean", converged}});
  }
  j["per_mu"] = per_mu;
  nlohmann::json trials = nlohmann::json::array();
  for (const TrialResult& t : res.trials) {
    const auto& r = t.report;
    trials.push_back({{"file", "trial_" + std::to_string(t.index) + ".csv"},
                      {"trial", t.trial},
                      {"mu", t.mu},
                      {"seed", t.seed},
                      {"t_star", r.best_iter},
                      {"best_exploitability", r.checkpoints[r.best_index].expl.gap},
                      {"final_exploitability", r.checkpoints.back().expl.gap},
                      {"aborted", r.trace.aborted}});
  }
  j["trials"] = trials;
  return j;
}

void WriteOutputs(const ExperimentConfig& config, const ExperimentResult& res,
                  const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create '" + dir + "': " + ec.message());
  auto open = [&](const std::string& name) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + name + "' in " + dir);
    return out;
  };
  for (const TrialResult& t : res.trials) {
    std::ofstream out = open("trial_" + std::to_string(t.index) + ".csv");
    t.report.WriteCsv(out);
  }
  {
    std::ofstream out = open("aggregate.csv");
    WriteAggregateCsv(res, out);
  }
  std::ofstream out = open("summary.json");
  out << ExperimentSummary(config, res).dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed in " + dir);
}

nlohmann::json TuneReport(const ExperimentConfig& config) {
  const Game g = ResolveGame(config);
  const GameModel& m = g.model;
  const SolverConfig& sc = config.solver;
  const double mu =
      config.mu_grid.empty() ? sc.EffectiveMu(g.spec) : config.mu_grid.front();
  const bool strongly = g.spec.StrongConcavity(Side::kMax) > 0.0;
  const ConcavityRegime regime =
      strongly ? ConcavityRegime::kStronglyConcave : ConcavityRegime::kConcave;
  nlohmann::json j;
  j["game"] = config.game.value("name", "");
  j["regime"] = RegimeName(regime);
  j["mu_reg"] = mu;
  j["epsilon"] = config.tune_epsilon;
  nlohmann::json rows = nlohmann::json::array();
  auto row = [&](const std::string& name, double v, const std::string& f) {
    rows.push_back({{"name", name}, {"value", Number(v)}, {"formula", f}});
  };
  const OccupancyConstants occ = ComputeOccupancyConstants(m);
  row("L_lambda", occ.lip_lambda, "sqrt(|S|) (|A|+|B|) / (1-gamma)^2");
  row("l_lambda", occ.smooth_lambda,
      "2 gamma sqrt(|S|) (|A|+|B|)^(3/2) / (1-gamma)^3");
  row("L_lambda_inv", occ.lip_lambda_inverse, "2 / (min rho (1-gamma))");
  nlohmann::json notes = nlohmann::json::array();
  ModuliReport mod;
  bool have_moduli = true;
  try {
    mod = ComputeModuli(m, g.spec, mu, regime);
  } catch (const ParameterError& e) {
    have_moduli = false;
    notes.push_back(e.what());
  }
  nlohmann::json tunings = nlohmann::json::object();
  if (have_moduli) {
    const std::string reg = strongly ? "" : " + mu";
    row("L_F", mod.lip_F, "sum of term Lipschitz bounds" + reg);
    row("l_F", mod.smooth_F, "sum of term smoothness bounds" + reg);
    row("L_U", mod.lip_U, "L_F L_lambda");
    row("l_U", mod.smooth_U, "l_F l_lambda");
    if (!strongly) {
      row("L_U_mu", mod.lip_U_reg, "L_F L_lambda^3");
      row("l_U_mu", mod.smooth_U_reg, "l_F l_lambda^2 L_lambda");
      row("mu_QG", mod.mu_qg, "min rho^2 (1-gamma)^2 mu / 4");
      row("mu_PL", mod.mu_pl,
          "min rho^4 (1-gamma)^12 mu^2 / (4 l_F gamma^2 |S|^(3/2) (|A|+|B|)^4)");
    } else {
      row("mu", mod.mu, "max-side strong concavity + mu_reg");
      row("mu_QG", mod.mu_qg, "min rho^2 (1-gamma)^2 mu / 4");
      row("mu_PL", mod.mu_pl,
          "min rho^4 (1-gamma)^7 mu^2 / (4 l_F gamma sqrt(|S|) (|A|+|B|)^(3/2))");
      if (mod.mu_pl_min > 0.0) {
        row("mu_PL_min", mod.mu_pl_min, "same chain for the min side");
      }
    }
    row("kappa", mod.kappa, "l / sqrt(mu_QG mu_PL)");
    row("L_star", mod.lip_maximizer, "l / sqrt(mu_PL mu_QG)");
    row("l_Phi", mod.smooth_phi, "l (1 + L_star)");
    row("mu_x_dominance", mod.grad_dominance,
        "(1-gamma) min rho / (2 sqrt(2))");

    TuneConstants tc;
    tc.smooth = mod.smooth;
    tc.lipschitz = mod.lip_phi;
    tc.kappa = mod.kappa;
    tc.mu = mod.mu_pl;
    tc.mu_y = mod.mu_pl;
    tc.smooth_phi = mod.smooth_phi;
    if (mod.mu_pl_min > 0.0) tc.mu_x = mod.mu_pl_min;
    tc.diam_x = std::sqrt(2.0 * m.n_states());
    tc.diam_y = std::sqrt(2.0 * m.n_states());
    tc.epsilon = config.tune_epsilon;
    tc.sigma2_x = 0.0;
    tc.sigma2_y = 0.0;
    if (sc.gradient_mode == GradientMode::kStochastic) {
      if (sc.explore_min > 0.0 && sc.explore_max > 0.0) {
        const EstimatorBounds bx = ComputeEstimatorBounds(
            mod.lip_F, m.discount(), sc.explore_min, sc.batch_min, sc.horizon);
        const EstimatorBounds by = ComputeEstimatorBounds(
            mod.lip_F, m.discount(), sc.explore_max, sc.batch_max, sc.horizon);
        tc.sigma2_x = bx.variance_bound * sc.batch_min;
        tc.sigma2_y = by.variance_bound * sc.batch_max;
        row("sigma2_x", *tc.sigma2_x,
            "27 L_F^2 / ((1-gamma)^6 eps_x^2)");
        row("sigma2_y", *tc.sigma2_y,
            "27 L_F^2 / ((1-gamma)^6 eps_y^2)");
        row("bias_x", bx.bias_bound,
            "256 L_F / ((1-gamma)^6 eps_x^2) exp(-(1-gamma)(H-1))");
        if (!bx.bias_valid) notes.push_back(bx.warning);
      } else {
        notes.push_back("stochastic mode with zero exploration: variance "
                        "bounds are infinite, sigma2 set to 0");
      }
    }
    const std::vector<std::pair<TuneRegime, std::string>> regimes = {
        {TuneRegime::kNcPplGdmax, "tau_x = 1/(5 l_Phi), tau_y = 1/l"},
        {TuneRegime::kPplPplGdmax, "tau_x = 1/(5 l_Phi), tau_y = 1/l"},
        {TuneRegime::kNcPplAltGda,
         "tau_x = 1/(500 l kappa^2), tau_y = 1/(5 l)"},
        {TuneRegime::kPplPplAltGda,
         "tau_x = mu_y^2/(160 l^3), tau_y = 1/(5 l)"}};
    for (const auto& [r, formula] : regimes) {
      try {
        const SaddleTuning t = Tune(r, tc);
        tunings[TuneRegimeName(r)] = {{"tau_min", Number(t.tau_min)},
                                      {"tau_max", Number(t.tau_max)},
                                      {"batch_min", t.batch_min},
                                      {"batch_max", t.batch_max},
                                      {"iters", t.iters},
                                      {"inner_iters", t.inner_iters},
                                      {"total_iters", t.total_iters},
                                      {"formula", formula}};
      } catch (const ParameterError& e) {
        tunings[TuneRegimeName(r)] = {{"skipped", e.what()}};
      }
    }
  }
  j["constants"] = rows;
  j["tunings"] = tunings;
  j["notes"] = notes;
  return j;
}

void PrintTuneReport(const nlohmann::json& report, std::ostream& out) {
  auto show = [](const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    char buf[40];
    if (v.is_number_integer()) {
      std::snprintf(buf, sizeof(buf), "%lld", v.get<long long>());
    } else {
      std::snprintf(buf, sizeof(buf), "%.6g", v.get<double>());
    }
    return std::string(buf);
  };
  out << "game " << report.at("game").get<std::string>() << ", regime "
      << report.at("regime").get<std::string>() << ", mu_reg "
      << show(report.at("mu_reg")) << ", epsilon "
      << show(report.at("epsilon")) << "\n";
  for (const auto& r : report.at("constants")) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "  %-16s %-14s %s\n",
                  r.at("name").get<std::string>().c_str(),
                  show(r.at("value")).c_str(),
                  r.at("formula").get<std::string>().c_str());
    out << buf;
  }
  for (const auto& [name, t] : report.at("tunings").items()) {
    out << name << ":";
    if (t.contains("skipped")) {
      out << " skipped (" << t.at("skipped").get<std::string>() << ")\n";
      continue;
    }
    out << "  " << t.at("formula").get<std::string>() << "\n";
    for (const char* key : {"tau_min", "tau_max", "batch_min", "batch_max",
                            "iters", "inner_iters", "total_iters"}) {
      out << "  " << key << " = " << show(t.at(key)) << "\n";
    }
  }
  for (const auto& n : report.at("notes")) {
    out << "note: " << n.get<std::string>() << "\n";
  }
}

}  // namespace cmg
