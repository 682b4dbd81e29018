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

#include "cmg/minmax_opt.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "cmg/errors.h"
#include "cmg/game_model.h"

namespace cmg {

Projector SimplexProductProjector(std::vector<int> block_sizes) {
  return [blocks = std::move(block_sizes)](const Eigen::VectorXd& v) {
    return ProjectSimplexProduct(v, blocks);
  };
}

Projector IdentityProjector() {
  return [](const Eigen::VectorXd& v) { return v; };
}

double StationarityProxy(const Eigen::VectorXd& grad,
                         const Eigen::VectorXd& point, double alpha,
                         const Projector& project) {
  if (!(alpha > 0.0)) throw ParameterError("stationarity_proxy: alpha <= 0");
  const Eigen::VectorXd diff = point - project(point - grad / alpha);
  // Clamp rounding noise; the closed form is nonnegative.
  return std::max(0.0, 2.0 * alpha * grad.dot(diff) -
                           alpha * alpha * diff.squaredNorm());
}

Eigen::VectorXd GradientMapping(const Eigen::VectorXd& grad,
                                const Eigen::VectorXd& point, double step,
                                const Projector& project) {
  if (!(step > 0.0)) throw ParameterError("gradient_mapping: step <= 0");
  return (point - project(point - step * grad)) / step;
}

std::string TuneRegimeName(TuneRegime regime) {
  switch (regime) {
    case TuneRegime::kNcPplGdmax: return "nc_ppl_gdmax";
    case TuneRegime::kPplPplGdmax: return "ppl_ppl_gdmax";
    case TuneRegime::kNcPplAltGda: return "nc_ppl_altgda";
    case TuneRegime::kPplPplAltGda: return "ppl_ppl_altgda";
  }
  return "";
}

TuneRegime ParseTuneRegime(const std::string& name) {
  for (TuneRegime r : {TuneRegime::kNcPplGdmax, TuneRegime::kPplPplGdmax,
                       TuneRegime::kNcPplAltGda, TuneRegime::kPplPplAltGda}) {
    if (TuneRegimeName(r) == name) return r;
  }
  throw ParameterError("tune: unknown regime '" + name + "'");
}

namespace {

double Require(const std::optional<double>& v, const char* name,
               bool allow_zero = false) {
  if (!v.has_value()) {
    throw ParameterError(std::string("tune: missing constant ") + name);
  }
  if (!std::isfinite(*v) || *v < 0.0 || (!allow_zero && *v == 0.0)) {
    throw ParameterError(std::string("tune: constant ") + name +
                         " must be positive");
  }
  return *v;
}

long long Count(double v) {
  if (!std::isfinite(v) || v > 9e18) return 9000000000000000000LL;
  return std::max(1LL, static_cast<long long>(std::ceil(v)));
}

// Logarithmic factors of the order bounds, floored at 1.
double Log1(double v) { return std::max(1.0, std::log(v)); }

}  // namespace

SaddleTuning Tune(TuneRegime regime, const TuneConstants& c) {
  SaddleTuning t;
  t.regime = regime;
  const double l = Require(c.smooth, "smooth (l)");
  const double eps = Require(c.epsilon, "epsilon");
  const double L = Require(c.lipschitz, "lipschitz (L)");
  const double s2x = Require(c.sigma2_x, "sigma2_x", true);
  const double s2y = Require(c.sigma2_y, "sigma2_y", true);
  const double dx = Require(c.diam_x, "diam_x");
  const bool two_sided = regime == TuneRegime::kPplPplGdmax ||
                         regime == TuneRegime::kPplPplAltGda;
  double mu_x = 0.0, mu_y = 0.0;
  if (two_sided) {
    mu_x = Require(c.mu_x, "mu_x");
    mu_y = Require(c.mu_y, "mu_y");
  } else if (c.mu.has_value() || !c.kappa.has_value()) {
    mu_y = Require(c.mu, "mu");
  }
  const double kappa =
      c.kappa.has_value() ? Require(c.kappa, "kappa") : l / mu_y;
  const double kappa_x = two_sided ? l / mu_x : 0.0;
  const double l_phi = c.smooth_phi.has_value()
                           ? Require(c.smooth_phi, "smooth_phi")
                           : l * (1.0 + kappa);
  switch (regime) {
    case TuneRegime::kNcPplGdmax: {
      const double dy = Require(c.diam_y, "diam_y");
      t.tau_min = 1.0 / (5.0 * l_phi);
      t.tau_max = 1.0 / l;
      t.inner_tol = eps / std::sqrt(18.0);
      t.batch_min = Count(s2x / (eps * eps));
      t.batch_max = Count(kappa * s2y / (eps * eps));
      t.total_iters = Count(std::pow(kappa, 3) * L * (dx + dy) / (eps * eps) *
                            Log1(1.0 / eps));
      t.inner_iters = Count(kappa * Log1(L * dy / t.inner_tol));
      t.iters = Count(static_cast<double>(t.total_iters) / t.inner_iters);
      break;
    }
    case TuneRegime::kPplPplGdmax: {
      const double dy = Require(c.diam_y, "diam_y");
      t.tau_min = 1.0 / (5.0 * l_phi);
      t.tau_max = 1.0 / l;
      t.inner_tol = eps;
      t.batch_min = Count(kappa_x * s2x / eps);
      t.batch_max = Count(l * kappa * s2y / (eps * eps));
      const double log_x = Log1(l * L * kappa_x * dx / eps);
      const double log_y = Log1(l * L * kappa * dy / eps);
      t.total_iters = Count(l * l / (mu_x * mu_y) * log_x * log_y);
      t.inner_iters = Count(kappa * log_y);
      t.iters = Count(static_cast<double>(t.total_iters) / t.inner_iters);
      break;
    }
    case TuneRegime::kNcPplAltGda: {
      const double dy = Require(c.diam_y, "diam_y");
      t.tau_min = 1.0 / (500.0 * l * kappa * kappa);
      t.tau_max = 1.0 / (5.0 * l);
      t.batch_min = Count(l * l * kappa * kappa * s2x / (eps * eps));
      t.batch_max = Count(kappa * kappa * s2y / (eps * eps));
      t.total_iters = Count(kappa * kappa * l * L * (dx + dy) / (eps * eps));
      t.iters = t.total_iters;
      break;
    }
    case TuneRegime::kPplPplAltGda: {
      const double dy = Require(c.diam_y, "diam_y");
      t.tau_min = mu_y * mu_y / (160.0 * l * l * l);
      t.tau_max = 1.0 / (5.0 * l);
      t.batch_min = Count(s2x / (mu_x * eps));
      t.batch_max = Count(s2y / (mu_x * mu_y * mu_y * eps));
      t.total_iters = Count(l * l * l / (mu_x * mu_y * mu_y) *
                            Log1(L * (dx + dy) / eps));
      t.iters = t.total_iters;
      break;
    }
  }
  return t;
}

void IterTrace::WriteCsv(std::ostream& out) const {
  out << "iter,f_value,d_x_proxy,d_y_proxy,grad_map_x_norm,grad_map_y_norm,"
         "lyapunov\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (const IterRecord& r : records) {
    out << r.iter << ',' << num(r.f_value) << ',' << num(r.d_x_proxy) << ','
        << num(r.d_y_proxy) << ',' << num(r.grad_map_x_norm) << ','
        << num(r.grad_map_y_norm) << ','
        << (r.lyapunov.has_value() ? num(*r.lyapunov) : std::string()) << '\n';
  }
}

double LyapunovValue(double phi_value, double f_value, double alpha,
                     std::optional<double> phi_star) {
  if (!(alpha >= 0.0)) throw ParameterError("lyapunov_value: alpha < 0");
  return (phi_value - phi_star.value_or(0.0)) + alpha * (phi_value - f_value);
}

InnerSolver ProjectedAscentSolver(const OracleSpec& oracle,
                                  Projector project_y, double tau,
                                  long long max_iters, double mu, double eps,
                                  double proxy_alpha) {
  if (!(tau > 0.0)) throw ParameterError("inner solver: tau must be > 0");
  return [=, &oracle](const Eigen::VectorXd& x, const Eigen::VectorXd& y0) {
    InnerResult res;
    res.y = y0;
    const bool certify = mu > 0.0 && eps > 0.0;
    for (long long k = 0; k < max_iters; ++k) {
      const Eigen::VectorXd g = oracle.grad_max(x, res.y).gradient;
      res.d_y_proxy = StationarityProxy(-g, res.y, proxy_alpha, project_y);
      if (certify && res.d_y_proxy <= 2.0 * mu * eps) {
        res.converged = true;
        return res;
      }
      res.y = project_y(res.y + tau * g);
      ++res.iters;
    }
    if (certify) {
      const Eigen::VectorXd g = oracle.grad_max(x, res.y).gradient;
      res.d_y_proxy = StationarityProxy(-g, res.y, proxy_alpha, project_y);
      res.converged = res.d_y_proxy <= 2.0 * mu * eps;
    } else {
      res.converged = true;
    }
    return res;
  };
}

namespace {

bool Diverged(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
              double threshold) {
  return !x.allFinite() || !y.allFinite() || x.norm() > threshold ||
         y.norm() > threshold;
}

void Finish(IterRecord& rec, const OracleSpec& oracle, const RunOptions& opt,
            const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (oracle.value) rec.f_value = oracle.value(x, y);
  if (opt.lyapunov_alpha.has_value() && oracle.phi) {
    rec.lyapunov = LyapunovValue(oracle.phi(x), rec.f_value,
                                 *opt.lyapunov_alpha, oracle.phi_star);
  }
}

void Record(IterTrace& trace, IterRecord rec, const RunOptions& opt,
            const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (opt.snapshot_every > 0 && rec.iter % opt.snapshot_every == 0) {
    trace.snapshots.push_back({rec.iter, x, y});
  }
  trace.records.push_back(std::move(rec));
  if (opt.on_iterate) opt.on_iterate(trace.records.back().iter, x, y);
}

void CheckTuning(const SaddleTuning& t) {
  if (!(t.tau_min > 0.0) || !(t.tau_max > 0.0) || t.iters < 1) {
    throw ParameterError("saddle tuning: step sizes and iterations must be "
                         "positive");
  }
}

}  // namespace

IterTrace Gdmax(const OracleSpec& oracle, const InnerSolver& inner,
                const SaddleTuning& tuning, const Projector& project_x,
                const Projector& project_y, Eigen::VectorXd x0,
                Eigen::VectorXd y0, const RunOptions& opt) {
  CheckTuning(tuning);
  IterTrace trace;
  Eigen::VectorXd x = std::move(x0);
  Eigen::VectorXd y = project_y(y0);
  for (long long t = 1; t <= tuning.iters; ++t) {
    const InnerResult in = inner(x, y);
    y = in.y;
    if (!in.converged) {
      trace.warnings.push_back("iteration " + std::to_string(t) +
                               ": inner solver did not certify its tolerance");
    }
    const Eigen::VectorXd gx = oracle.grad_min(x, y).gradient;
    IterRecord rec;
    rec.iter = t;
    rec.d_x_proxy = StationarityProxy(gx, x, opt.proxy_alpha, project_x);
    rec.d_y_proxy = in.d_y_proxy;
    rec.grad_map_x_norm =
        GradientMapping(gx, x, tuning.tau_min, project_x).norm();
    rec.grad_map_y_norm = std::sqrt(in.d_y_proxy) / opt.proxy_alpha;
    x = project_x(x - tuning.tau_min * gx);
    if (Diverged(x, y, opt.divergence_threshold)) {
      trace.aborted = true;
      trace.abort_reason = "divergence guard at iteration " + std::to_string(t);
      break;
    }
    Finish(rec, oracle, opt, x, y);
    Record(trace, std::move(rec), opt, x, y);
  }
  trace.x = x;
  trace.y = y;
  return trace;
}

IterTrace AltGda(const OracleSpec& oracle, const SaddleTuning& tuning,
                 const Projector& project_x, const Projector& project_y,
                 Eigen::VectorXd x0, Eigen::VectorXd y0,
                 const RunOptions& opt) {
  CheckTuning(tuning);
  IterTrace trace;
  Eigen::VectorXd x = std::move(x0);
  Eigen::VectorXd y = std::move(y0);
  for (long long t = 1; t <= tuning.iters; ++t) {
    const Eigen::VectorXd gx = oracle.grad_min(x, y).gradient;
    IterRecord rec;
    rec.iter = t;
    rec.d_x_proxy = StationarityProxy(gx, x, opt.proxy_alpha, project_x);
    rec.grad_map_x_norm =
        GradientMapping(gx, x, tuning.tau_min, project_x).norm();
    const Eigen::VectorXd x_next = project_x(x - tuning.tau_min * gx);
    const Eigen::VectorXd gy =
        oracle.grad_max(opt.simultaneous ? x : x_next, y).gradient;
    rec.d_y_proxy = StationarityProxy(-gy, y, opt.proxy_alpha, project_y);
    rec.grad_map_y_norm =
        GradientMapping(-gy, y, tuning.tau_max, project_y).norm();
    x = x_next;
    y = project_y(y + tuning.tau_max * gy);
    if (Diverged(x, y, opt.divergence_threshold)) {
      trace.aborted = true;
      trace.abort_reason = "divergence guard at iteration " + std::to_string(t);
      break;
    }
    Finish(rec, oracle, opt, x, y);
    Record(trace, std::move(rec), opt, x, y);
  }
  trace.x = x;
  trace.y = y;
  return trace;
}

SaddleCertificate CertifySaddle(const Eigen::VectorXd& grad_x,
                                const Eigen::VectorXd& x,
                                const std::vector<int>& blocks_x,
                                const Eigen::VectorXd& grad_y,
                                const Eigen::VectorXd& y,
                                const std::vector<int>& blocks_y) {
  SaddleCertificate cert;
  Eigen::Index off = 0;
  for (int n : blocks_x) {
    cert.min_side += grad_x.segment(off, n).dot(x.segment(off, n)) -
                     grad_x.segment(off, n).minCoeff();
    off += n;
  }
  off = 0;
  for (int n : blocks_y) {
    cert.max_side += grad_y.segment(off, n).maxCoeff() -
                     grad_y.segment(off, n).dot(y.segment(off, n));
    off += n;
  }
  return cert;
}

}  // namespace cmg
