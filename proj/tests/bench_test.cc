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

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <algorithm>
#include <sys/wait.h>
#include <unistd.h>
#include <sstream>

#include "cmg/errors.h"
#include "cmg/rng.h"
#include "doctest.h"

namespace cmg {
namespace {

namespace fs = std::filesystem;

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path ScratchDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() /
                       ("cmg_bench_test_" + std::to_string(::getpid()) + "_" +
                        name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

nlohmann::json SmallRpsd() {
  return {{"game", {{"name", "iterated_rpsd"}, {"gamma", 0.8}}},
          {"solver",
           {{"algorithm", "alt_pgda"},
            {"outer_iters", 60},
            {"eval_cadence", 20},
            {"init", "dirichlet"}}},
          {"trials", 3},
          {"mu_grid", {0.001, 0.01, 0.1}},
          {"master_seed", 11}};
}

int RunCli(const std::string& args) {
  const std::string cmd = std::string(CMG_SOLVE_BIN) + " " + args +
                          " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_CASE("Experiment config") {
  const std::vector<std::string> names = PresetNames();
  for (const char* n : {"fig1_altpgda", "fig1_nestpg_10", "fig1_nestpg_100"}) {
    CHECK(std::find(names.begin(), names.end(), n) != names.end());
  }
  const ExperimentConfig fig = ExperimentFromJson({{"preset", "fig1_altpgda"}});
  CHECK(fig.trials == 20);
  CHECK(fig.mu_grid.size() == 3);
  CHECK(fig.solver.algorithm == Algorithm::kAltPgda);
  CHECK(fig.solver.tau_min == 0.1);
  CHECK(fig.solver.tau_max == 0.1);
  CHECK(fig.solver.init == InitMode::kDirichlet);
  const ExperimentConfig patched = ExperimentFromJson(
      {{"preset", "fig1_nestpg_100"},
       {"trials", 2},
       {"solver", {{"outer_iters", 50}}}});
  CHECK(patched.trials == 2);
  CHECK(patched.solver.outer_iters == 50);
  CHECK(patched.solver.inner_iters == 100);
  CHECK(patched.solver.algorithm == Algorithm::kNestPg);
  const ExperimentConfig round =
      ExperimentFromJson(ExperimentToJson(patched));
  CHECK(ExperimentToJson(round) == ExperimentToJson(patched));

  CHECK_THROWS_WITH_AS(ExperimentFromJson({{"game", SmallRpsd()["game"]},
                                           {"trails", 3}}),
                       doctest::Contains("trails"), ConfigError);
  CHECK_THROWS_WITH_AS(ExperimentFromJson({{"preset", "fig2"}}),
                       doctest::Contains("fig2"), ConfigError);
  CHECK_THROWS_AS(ExperimentFromJson({{"trials", 1}}), ConfigError);
  const ExperimentConfig bad_game =
      ExperimentFromJson({{"game", {{"name", "go"}}}});
  CHECK_THROWS_WITH_AS(ResolveGame(bad_game), doctest::Contains("game.name"),
                       ConfigError);
}

TEST_CASE("Seeds") {
  CHECK(TrialSeed(3, 0) == HashSeed(3, 0));
  CHECK(TrialSeed(3, 0) != TrialSeed(3, 1));
  CHECK(TrialSeed(3, 0) != TrialSeed(4, 0));
  ExperimentConfig c = ExperimentFromJson(SmallRpsd());
  ::setenv("CMG_SOLVE_SEED", "123", 1);
  CHECK(ApplySeedOverride(c));
  CHECK(c.master_seed == 123);
  ::setenv("CMG_SOLVE_SEED", "12x", 1);
  CHECK_THROWS_AS(ApplySeedOverride(c), ConfigError);
  ::unsetenv("CMG_SOLVE_SEED");
  CHECK_FALSE(ApplySeedOverride(c));
}

TEST_CASE("RunExperiment") {
  const ExperimentConfig c = ExperimentFromJson(SmallRpsd());
  const ExperimentResult one = RunExperiment(c, 1);
  const ExperimentResult three = RunExperiment(c, 3);
  REQUIRE(one.trials.size() == 9);
  CHECK(one.all_completed);
  for (size_t i = 0; i < one.trials.size(); ++i) {
    std::ostringstream a, b;
    one.trials[i].report.WriteCsv(a);
    three.trials[i].report.WriteCsv(b);
    CHECK(a.str() == b.str());
  }
  SUBCASE("common seeds across the mu grid") {
    for (int t = 0; t < 3; ++t) {
      CHECK(one.trials[t].seed == one.trials[3 + t].seed);
      CHECK(one.trials[t].seed == one.trials[6 + t].seed);
    }
  }
  SUBCASE("aggregate matches the trial files") {
    std::ostringstream out;
    WriteAggregateCsv(one, out);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "mu,iter,mean_exploitability,stderr_exploitability,n_trials");
    std::map<double, int> rows_per_mu;
    int row = 0;
    while (std::getline(in, line)) {
      std::istringstream f(line);
      std::string cell;
      std::vector<std::string> cells;
      while (std::getline(f, cell, ',')) cells.push_back(cell);
      REQUIRE(cells.size() == 5);
      const double mu = std::stod(cells[0]);
      ++rows_per_mu[mu];
      const int k = row % 4;
      const int m = row / 4;
      double mean = 0.0;
      for (int t = 0; t < 3; ++t) {
        mean += one.trials[m * 3 + t].report.checkpoints[k].expl.gap;
      }
      mean /= 3.0;
      CHECK(std::abs(std::stod(cells[2]) - mean) <= 1e-12);
      CHECK(cells[4] == "3");
      ++row;
    }
    REQUIRE(rows_per_mu.size() == 3);
    for (const auto& [mu, n] : rows_per_mu) CHECK(n == 4);
  }
  const nlohmann::json s = ExperimentSummary(c, one);
  CHECK(s["per_mu"].size() == 3);
  CHECK(s["trials"].size() == 9);
  CHECK(s["trials"][4]["file"] == "trial_4.csv");
}

TEST_CASE("Tune report") {
  SUBCASE("2x2 matrix game at gamma 0") {
    const ExperimentConfig c = ExperimentFromJson(
        {{"game",
          {{"name", "matrix_game"},
           {"gamma", 0.0},
           {"params", {{"payoff", {{1, -1}, {-1, 1}}}}}}}});
    const nlohmann::json r = TuneReport(c);
    CHECK(r["constants"][0]["name"] == "L_lambda");
    CHECK(r["constants"][0]["value"] == 4.0);
  }
  auto value = [](const nlohmann::json& r, const std::string& name) {
    for (const auto& row : r["constants"]) {
      if (row["name"] == name) return row["value"].get<double>();
    }
    FAIL("missing " << name);
    return 0.0;
  };
  SUBCASE("alternating regimes use tau_y = 1/(5 l)") {
    ExperimentConfig c = ExperimentFromJson(SmallRpsd());
    const nlohmann::json r = TuneReport(c);
    const Game g = ResolveGame(c);
    const ModuliReport mod =
        ComputeModuli(g.model, g.spec, 0.001, ConcavityRegime::kConcave);
    CHECK(r["tunings"]["nc_ppl_altgda"]["tau_max"].get<double>() ==
          doctest::Approx(1.0 / (5.0 * mod.smooth)).epsilon(1e-14));
    CHECK(value(r, "kappa") ==
          doctest::Approx(mod.kappa).epsilon(1e-14));
  }
  SUBCASE("discount powers") {
    nlohmann::json doc = SmallRpsd();
    doc["game"]["gamma"] = 0.5;
    const nlohmann::json a = TuneReport(ExperimentFromJson(doc));
    doc["game"]["gamma"] = 0.99;
    const nlohmann::json b = TuneReport(ExperimentFromJson(doc));
    CHECK(value(b, "L_lambda") / value(a, "L_lambda") ==
          doctest::Approx(2500.0).epsilon(1e-12));
    CHECK(value(b, "l_lambda") / value(a, "l_lambda") ==
          doctest::Approx(0.99 / 0.5 * 125000.0).epsilon(1e-12));
    CHECK(value(b, "mu_QG") / value(a, "mu_QG") ==
          doctest::Approx(0.0004).epsilon(1e-12));
  }
  std::ostringstream out;
  PrintTuneReport(TuneReport(ExperimentFromJson(SmallRpsd())), out);
  CHECK(out.str().find("tau_max") != std::string::npos);
}

TEST_CASE("cmg-solve binary") {
  const fs::path dir = ScratchDir("cli");
  const fs::path cfg = dir / "exp.json";
  {
    nlohmann::json doc = SmallRpsd();
    doc["solver"]["gradient_mode"] = "stochastic";
    doc["solver"]["batch_min"] = 8;
    doc["solver"]["batch_max"] = 8;
    doc["solver"]["horizon"] = 8;
    doc["trials"] = 2;
    std::ofstream(cfg) << doc.dump();
  }
  REQUIRE(RunCli("run --config " + cfg.string() + " --out " +
                 (dir / "a").string()) == 0);
  REQUIRE(RunCli("run --config " + cfg.string() + " --jobs 2 --out " +
                 (dir / "b").string()) == 0);
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    const fs::path other = dir / "b" / e.path().filename();
    REQUIRE(fs::exists(other));
    CHECK(Slurp(e.path()) == Slurp(other));
    ++files;
  }
  CHECK(files == 6 + 2);
  CHECK(Slurp(dir / "a" / "trial_0.csv").rfind(kReportCsvHeader, 0) == 0);

  ::setenv("CMG_SOLVE_SEED", "77", 1);
  REQUIRE(RunCli("run --config " + cfg.string() + " --out " +
                 (dir / "c").string()) == 0);
  ::unsetenv("CMG_SOLVE_SEED");
  const nlohmann::json summary =
      nlohmann::json::parse(Slurp(dir / "c" / "summary.json"));
  CHECK(summary["config"]["master_seed"] == 77);
  CHECK(Slurp(dir / "c" / "trial_0.csv") != Slurp(dir / "a" / "trial_0.csv"));

  CHECK(RunCli("validate --config " + cfg.string()) == 0);
  CHECK(RunCli("tune --config " + cfg.string()) == 0);
  {
    std::ofstream(dir / "bad.json") << R"({"game": {"name": "go"}})";
  }
  CHECK(RunCli("validate --config " + (dir / "bad.json").string()) == 2);
  CHECK(RunCli("run --config " + (dir / "missing.json").string()) == 2);
  CHECK(RunCli("frobnicate") != 0);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace cmg
