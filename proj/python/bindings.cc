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

// Python bindings. Structured values (configs, summaries, reports) cross the
// boundary as JSON text; the package wrapper turns them into dicts.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>

#include "cmg/bench.h"
#include "cmg/cmg_solvers.h"
#include "cmg/errors.h"
#include "cmg/game_model.h"
#include "cmg/games.h"
#include "cmg/occupancy.h"
#include "cmg/utility.h"

namespace py = pybind11;

namespace cmg {
namespace {

PolicyPair MakePair(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  PolicyPair p;
  p.min_policy = Policy{x};
  p.max_policy = Policy{y};
  return p;
}

Side ParseSide(const std::string& s) {
  if (s == "min") return Side::kMin;
  if (s == "max") return Side::kMax;
  throw ParameterError("side must be 'min' or 'max'");
}

nlohmann::json Parse(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid json: ") + e.what());
  }
}

py::dict OccupancyDict(const OccupancyMeasure& occ) {
  py::dict d;
  d["joint"] = Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(
      occ.joint.data(), static_cast<Eigen::Index>(occ.joint.size())));
  d["marginal_min"] = occ.marginal_min;
  d["marginal_max"] = occ.marginal_max;
  d["state"] = occ.state;
  return d;
}

std::string ReportJson(const SolverReport& r) {
  nlohmann::json out = r.Summary();
  nlohmann::json cps = nlohmann::json::array();
  for (const Checkpoint& c : r.checkpoints) {
    cps.push_back({{"iter", c.iter},
                   {"exploitability", c.expl.gap},
                   {"u_value", c.expl.u_value},
                   {"d_x_proxy", c.d_x_proxy},
                   {"d_y_proxy", c.d_y_proxy}});
  }
  out["checkpoints"] = std::move(cps);
  out["min_policy"] = PolicyToJson(r.output.min_policy);
  out["max_policy"] = PolicyToJson(r.output.max_policy);
  return out.dump();
}

}  // namespace
}  // namespace cmg

PYBIND11_MODULE(_cmg, m) {
  using namespace cmg;
  m.doc() = "Native core of cmg_solve.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParameterError>(m, "ParameterError",
                                         PyExc_ValueError);

  py::class_<Game>(m, "Game")
      .def_property_readonly("n_states",
                             [](const Game& g) { return g.model.n_states(); })
      .def_property_readonly(
          "n_actions_min", [](const Game& g) { return g.model.n_actions_min(); })
      .def_property_readonly(
          "n_actions_max", [](const Game& g) { return g.model.n_actions_max(); })
      .def_property_readonly("gamma",
                             [](const Game& g) { return g.model.discount(); })
      .def("occupancy",
           [](const Game& g, const Eigen::MatrixXd& x,
              const Eigen::MatrixXd& y) {
             return OccupancyDict(ExactOccupancy(g.model, MakePair(x, y)));
           })
      .def(
          "utility",
          [](const Game& g, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
             double mu_reg) {
            return EvalUtilityReg(g.model, g.spec, MakePair(x, y), mu_reg);
          },
          py::arg("x"), py::arg("y"), py::arg("mu_reg") = 0.0)
      .def(
          "gradient",
          [](const Game& g, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
             const std::string& side, double mu_reg) {
            return ExactGrad(g.model, g.spec, MakePair(x, y), ParseSide(side),
                             mu_reg);
          },
          py::arg("x"), py::arg("y"), py::arg("side"), py::arg("mu_reg") = 0.0)
      .def(
          "exploitability",
          [](const Game& g, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
             double tol) {
            const Exploitability e =
                ComputeExploitability(g.model, g.spec, MakePair(x, y), tol);
            py::dict d;
            d["gap"] = e.gap;
            d["gap_min_side"] = e.gap_min_side;
            d["gap_max_side"] = e.gap_max_side;
            d["u_value"] = e.u_value;
            d["certificate"] = CertificateName(e.certificate);
            return d;
          },
          py::arg("x"), py::arg("y"), py::arg("tol") = 1e-8)
      .def(
          "solve",
          [](const Game& g, const std::string& config) {
            const SolverConfig c = SolverConfigFromJson(Parse(config));
            SolverReport r;
            {
              py::gil_scoped_release release;
              r = RunSolver(g.model, g.spec, c);
            }
            return ReportJson(r);
          },
          py::arg("config_json"));

  m.def("iterated_rpsd", &BuildIteratedRpsd, py::arg("gamma"),
        py::arg("dummy_penalty") = kDefaultDummyPenalty);
  m.def("matrix_game", &BuildMatrixGame, py::arg("payoff"), py::arg("gamma"));
  m.def("game_from_json",
        [](const std::string& recipe) { return GameFromJson(Parse(recipe)); });
  m.def("presets", &PresetNames);
  m.def("preset", [](const std::string& n) { return PresetJson(n).dump(); });
  m.def("run_experiment", [](const std::string& config, int jobs) {
    const ExperimentConfig c = ExperimentFromJson(Parse(config));
    ExperimentResult r;
    {
      py::gil_scoped_release release;
      r = RunExperiment(c, jobs);
    }
    return ExperimentSummary(c, r).dump();
  });
  m.def("tune_report", [](const std::string& config) {
    return TuneReport(ExperimentFromJson(Parse(config))).dump();
  });
  m.def("validate", [](const std::string& config) {
    const ExperimentConfig c = ExperimentFromJson(Parse(config));
    ResolveGame(c);
    return ExperimentToJson(c).dump();
  });
}
