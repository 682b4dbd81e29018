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

#ifndef CMG_MINMAX_OPT_H_
#define CMG_MINMAX_OPT_H_

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cmg {

using Projector = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

Projector SimplexProductProjector(std::vector<int> block_sizes);
Projector IdentityProjector();

// D(x, alpha) = 2 alpha <g, x - x+> - alpha^2 ||x - x+||^2 with
// x+ = Pi(x - g / alpha). For an ascent problem pass -g.
double StationarityProxy(const Eigen::VectorXd& grad,
                         const Eigen::VectorXd& point, double alpha,
                         const Projector& project);

// (x - Pi(x - step * g)) / step.
Eigen::VectorXd GradientMapping(const Eigen::VectorXd& grad,
                                const Eigen::VectorXd& point, double step,
                                const Projector& project);

struct OracleSample {
  Eigen::VectorXd gradient;
  double second_moment = 0.0;
};

// f(x, y) is minimized in x and maximized in y. grad_max returns d f / d y.
struct OracleSpec {
  std::function<OracleSample(const Eigen::VectorXd&, const Eigen::VectorXd&)>
      grad_min;
  std::function<OracleSample(const Eigen::VectorXd&, const Eigen::VectorXd&)>
      grad_max;
  // Optional diagnostics for the trace.
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> value;
  std::function<double(const Eigen::VectorXd&)> phi;  // max_y f(x, y)
  std::optional<double> phi_star;
  double bias_min = 0.0;
  double bias_max = 0.0;
  double variance_min = 0.0;
  double variance_max = 0.0;
};

enum class TuneRegime { kNcPplGdmax, kPplPplGdmax, kNcPplAltGda, kPplPplAltGda };

std::string TuneRegimeName(TuneRegime regime);
TuneRegime ParseTuneRegime(const std::string& name);

struct SaddleTuning {
  double tau_min = 0.0;
  double tau_max = 0.0;
  long long batch_min = 1;
  long long batch_max = 1;
  long long iters = 1;        // outer iterations
  long long inner_iters = 0;  // GDmax only
  double inner_tol = 0.0;     // epsilon_y, GDmax only
  long long total_iters = 0;  // total iteration count before splitting
  TuneRegime regime = TuneRegime::kNcPplAltGda;
};

struct TuneConstants {
  std::optional<double> smooth;      // l
  std::optional<double> lipschitz;   // L
  std::optional<double> mu;          // pPL modulus in y (one-sided regimes)
  std::optional<double> mu_x;
  std::optional<double> mu_y;
  std::optional<double> kappa;       // defaults to l / mu (or l / mu_y)
  std::optional<double> smooth_phi;  // defaults to l (1 + kappa)
  std::optional<double> diam_x;
  std::optional<double> diam_y;
  std::optional<double> sigma2_x;
  std::optional<double> sigma2_y;
  std::optional<double> epsilon;
};

// Step sizes use explicit constants (1/(5 l_Phi), 1/(500 l kappa^2),
// mu_y^2/(160 l^3), 1/(5 l)); batch sizes and iteration counts are the
// order expressions with unit leading constant.
// Throws ParameterError naming the first missing or non-positive constant.
SaddleTuning Tune(TuneRegime regime, const TuneConstants& c);

struct IterRecord {
  long long iter = 0;
  double f_value = 0.0;
  double d_x_proxy = 0.0;
  double d_y_proxy = 0.0;
  double grad_map_x_norm = 0.0;
  double grad_map_y_norm = 0.0;
  std::optional<double> lyapunov;
};

struct Snapshot {
  long long iter = 0;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

struct IterTrace {
  std::vector<IterRecord> records;
  std::vector<Snapshot> snapshots;
  std::vector<std::string> warnings;
  bool aborted = false;
  std::string abort_reason;
  Eigen::VectorXd x;
  Eigen::VectorXd y;

  void WriteCsv(std::ostream& out) const;
};

struct RunOptions {
  // alpha in the D proxies; the tuned l is the natural choice.
  double proxy_alpha = 1.0;
  long long snapshot_every = 10;
  // Lyapunov weight; the value is recorded only when set and phi is given.
  std::optional<double> lyapunov_alpha;
  double divergence_threshold = 1e6;
  // Alt-GDA diagnostic: evaluate the y gradient at x_{t-1}.
  bool simultaneous = false;
  // Called after every outer iteration with (t, x_t, y_t).
  std::function<void(long long, const Eigen::VectorXd&,
                     const Eigen::VectorXd&)>
      on_iterate;
};

struct InnerResult {
  Eigen::VectorXd y;
  long long iters = 0;
  bool converged = false;
  double d_y_proxy = 0.0;
};

using InnerSolver = std::function<InnerResult(const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& y_warm)>;

// Projected gradient ascent on f(x, .) with step tau, stopping once the D_Y
// proxy is at most 2 mu eps (pPL certificate of an eps-maximizer) or after
// max_iters steps. mu <= 0 or eps <= 0 disables the certificate.
InnerSolver ProjectedAscentSolver(const OracleSpec& oracle, Projector project_y,
                                  double tau, long long max_iters, double mu,
                                  double eps, double proxy_alpha);

// y_{t} = ARGMAX(f(x_{t-1}, .)), x_t = Pi(x_{t-1} - tau_x g_x(x_{t-1}, y_t)).
IterTrace Gdmax(const OracleSpec& oracle, const InnerSolver& inner,
                const SaddleTuning& tuning, const Projector& project_x,
                const Projector& project_y, Eigen::VectorXd x0,
                Eigen::VectorXd y0, const RunOptions& options = {});

// x_t = Pi(x_{t-1} - tau_x g_x(x_{t-1}, y_{t-1})),
// y_t = Pi(y_{t-1} + tau_y g_y(x_t, y_{t-1})).
IterTrace AltGda(const OracleSpec& oracle, const SaddleTuning& tuning,
                 const Projector& project_x, const Projector& project_y,
                 Eigen::VectorXd x0, Eigen::VectorXd y0,
                 const RunOptions& options = {});

// (Phi - Phi*) + alpha (Phi - f); phi_star absent reports Phi + alpha (Phi - f).
double LyapunovValue(double phi_value, double f_value, double alpha,
                     std::optional<double> phi_star = std::nullopt);

struct SaddleCertificate {
  double min_side = 0.0;  // max_x' <g_x, x - x'>
  double max_side = 0.0;  // max_y' <g_y, y' - y>
};

// Closed-form vertex evaluation over simplex products.
SaddleCertificate CertifySaddle(const Eigen::VectorXd& grad_x,
                                const Eigen::VectorXd& x,
                                const std::vector<int>& blocks_x,
                                const Eigen::VectorXd& grad_y,
                                const Eigen::VectorXd& y,
                                const std::vector<int>& blocks_y);

}  // namespace cmg

#endif  // CMG_MINMAX_OPT_H_
