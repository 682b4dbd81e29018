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

#include <algorithm>
#include <cmath>

#include "cmg/errors.h"

namespace cmg {
namespace {

size_t LinearSize(TermSide side, int S, int A, int B) {
  switch (side) {
    case TermSide::kMin: return static_cast<size_t>(S) * A;
    case TermSide::kMax: return static_cast<size_t>(S) * B;
    case TermSide::kJoint: return static_cast<size_t>(S) * A * B;
  }
  return 0;
}

const Eigen::MatrixXd& MarginalFor(const OccupancyMeasure& occ,
                                   TermSide side) {
  if (side == TermSide::kJoint) {
    throw ParameterError("curvature terms need side min or max");
  }
  return side == TermSide::kMin ? occ.marginal_min : occ.marginal_max;
}

// Accumulates scale * dF/dlambda into the joint gradient.
void AddGradient(const UtilitySpec& spec, const OccupancyMeasure& occ,
                 double scale, std::vector<double>& grad) {
  const int S = occ.n_states;
  const int A = occ.n_actions_min;
  const int B = occ.n_actions_max;
  const double w = scale * spec.weight;
  if (spec.kind == TermKind::kSum) {
    for (const auto& child : spec.terms) AddGradient(child, occ, w, grad);
    return;
  }
  // Per-marginal derivative, broadcast over the other player's action.
  Eigen::MatrixXd dmarg;
  if (spec.kind == TermKind::kLinear) {
    if (spec.side == TermSide::kJoint) {
      for (size_t k = 0; k < grad.size(); ++k) grad[k] += w * spec.reward[k];
      return;
    }
    const int n = spec.side == TermSide::kMin ? A : B;
    dmarg = Unflatten(Eigen::Map<const Eigen::VectorXd>(spec.reward.data(),
                                                        spec.reward.size()),
                      S, n);
  } else if (spec.kind == TermKind::kNegSqNorm) {
    dmarg = -MarginalFor(occ, spec.side);
  } else {
    const Eigen::MatrixXd& m = MarginalFor(occ, spec.side);
    dmarg = -(1.0 + m.array().max(kEntropyFloor).log()).matrix();
  }
  size_t k = 0;
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      for (int b = 0; b < B; ++b, ++k) {
        grad[k] += w * (spec.side == TermSide::kMin ? dmarg(s, a)
                                                    : dmarg(s, b));
      }
    }
  }
}

double TermValue(const UtilitySpec& spec, const OccupancyMeasure& occ) {
  switch (spec.kind) {
    case TermKind::kSum: {
      double total = 0.0;
      for (const auto& child : spec.terms) total += TermValue(child, occ);
      return spec.weight * total;
    }
    case TermKind::kLinear: {
      double total = 0.0;
      if (spec.side == TermSide::kJoint) {
        for (size_t k = 0; k < occ.joint.size(); ++k) {
          total += spec.reward[k] * occ.joint[k];
        }
      } else {
        const Eigen::VectorXd m = Flatten(MarginalFor(occ, spec.side));
        for (Eigen::Index k = 0; k < m.size(); ++k) {
          total += spec.reward[k] * m(k);
        }
      }
      return spec.weight * total;
    }
    case TermKind::kNegSqNorm:
      return -0.5 * spec.weight * MarginalFor(occ, spec.side).squaredNorm();
    case TermKind::kEntropy: {
      double total = 0.0;
      const Eigen::MatrixXd& m = MarginalFor(occ, spec.side);
      for (Eigen::Index k = 0; k < m.size(); ++k) {
        const double v = m.data()[k];
        if (v > 0.0) total -= v * std::log(v);
      }
      return spec.weight * total;
    }
  }
  return 0.0;
}

double Norm(const std::vector<double>& v) {
  double total = 0.0;
  for (double e : v) total += e * e;
  return std::sqrt(total);
}

double SideDim(TermSide side, int S, int A, int B) {
  return static_cast<double>(LinearSize(side, S, A, B));
}

}  // namespace

UtilitySpec UtilitySpec::Linear(TermSide side, std::vector<double> reward,
                                double weight) {
  UtilitySpec spec;
  spec.kind = TermKind::kLinear;
  spec.side = side;
  spec.weight = weight;
  spec.reward = std::move(reward);
  return spec;
}

UtilitySpec UtilitySpec::NegSqNorm(Side side, double weight) {
  UtilitySpec spec;
  spec.kind = TermKind::kNegSqNorm;
  spec.side = side == Side::kMin ? TermSide::kMin : TermSide::kMax;
  spec.weight = weight;
  return spec;
}

UtilitySpec UtilitySpec::Entropy(Side side, double weight) {
  UtilitySpec spec;
  spec.kind = TermKind::kEntropy;
  spec.side = side == Side::kMin ? TermSide::kMin : TermSide::kMax;
  spec.weight = weight;
  return spec;
}

UtilitySpec UtilitySpec::Sum(std::vector<UtilitySpec> terms, double weight) {
  UtilitySpec spec;
  spec.kind = TermKind::kSum;
  spec.weight = weight;
  spec.terms = std::move(terms);
  return spec;
}

double UtilitySpec::Value(const OccupancyMeasure& occ) const {
  return TermValue(*this, occ);
}

std::vector<double> UtilitySpec::JointGradient(
    const OccupancyMeasure& occ) const {
  std::vector<double> grad(occ.joint.size(), 0.0);
  AddGradient(*this, occ, 1.0, grad);
  return grad;
}

double UtilitySpec::LipF(int S, int A, int B) const {
  const double w = std::abs(weight);
  switch (kind) {
    case TermKind::kSum: {
      double total = 0.0;
      for (const auto& child : terms) total += child.LipF(S, A, B);
      return w * total;
    }
    case TermKind::kLinear:
      return w * Norm(reward);
    case TermKind::kNegSqNorm:
      // Occupancy measures live in a simplex of diameter sqrt(2).
      return w * std::sqrt(2.0);
    case TermKind::kEntropy:
      return w * std::sqrt(SideDim(side, S, A, B)) *
             (1.0 - std::log(kEntropyFloor));
  }
  return 0.0;
}

double UtilitySpec::SmoothF() const {
  const double w = std::abs(weight);
  switch (kind) {
    case TermKind::kSum: {
      double total = 0.0;
      for (const auto& child : terms) total += child.SmoothF();
      return w * total;
    }
    case TermKind::kLinear: return 0.0;
    case TermKind::kNegSqNorm: return w;
    case TermKind::kEntropy: return w / kEntropyFloor;
  }
  return 0.0;
}

namespace {

// Signed curvature of F along lambda_side: positive means concave.
double SignedCurvature(const UtilitySpec& spec, TermSide side) {
  switch (spec.kind) {
    case TermKind::kSum: {
      double total = 0.0;
      for (const auto& child : spec.terms) {
        total += SignedCurvature(child, side);
      }
      return spec.weight * total;
    }
    case TermKind::kLinear: return 0.0;
    // -sum lambda log lambda has Hessian -diag(1 / lambda) and lambda <= 1.
    case TermKind::kNegSqNorm:
    case TermKind::kEntropy:
      return spec.side == side ? spec.weight : 0.0;
  }
  return 0.0;
}

}  // namespace

double UtilitySpec::StrongConcavity(Side s) const {
  if (s == Side::kMax) {
    return std::max(0.0, SignedCurvature(*this, TermSide::kMax));
  }
  return std::max(0.0, -SignedCurvature(*this, TermSide::kMin));
}

void UtilitySpec::CheckDimensions(int S, int A, int B) const {
  if (kind == TermKind::kSum) {
    for (const auto& child : terms) child.CheckDimensions(S, A, B);
    return;
  }
  if (kind == TermKind::kLinear) {
    if (reward.size() != LinearSize(side, S, A, B)) {
      throw ParameterError("linear utility: reward size does not match game");
    }
  } else if (side == TermSide::kJoint) {
    throw ParameterError("curvature terms need side min or max");
  }
}

bool UtilitySpec::IsLinear() const {
  if (kind == TermKind::kSum) {
    return std::all_of(terms.begin(), terms.end(),
                       [](const UtilitySpec& t) { return t.IsLinear(); });
  }
  return kind == TermKind::kLinear;
}

Eigen::MatrixXd SideReward(const std::vector<double>& joint_gradient,
                           const Policy& opponent, Side side, int S, int A,
                           int B) {
  Eigen::MatrixXd z =
      Eigen::MatrixXd::Zero(S, side == Side::kMin ? A : B);
  size_t k = 0;
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      for (int b = 0; b < B; ++b, ++k) {
        if (side == Side::kMin) {
          z(s, a) += opponent(s, b) * joint_gradient[k];
        } else {
          z(s, b) += opponent(s, a) * joint_gradient[k];
        }
      }
    }
  }
  return z;
}

double EvalUtility(const GameModel& model, const UtilitySpec& spec,
                   const PolicyPair& pair) {
  spec.CheckDimensions(model.n_states(), model.n_actions_min(),
                       model.n_actions_max());
  return spec.Value(ExactOccupancy(model, pair));
}

double EvalUtilityReg(const GameModel& model, const UtilitySpec& spec,
                      const PolicyPair& pair, double mu_reg) {
  if (!(mu_reg >= 0.0)) {
    throw ParameterError("eval_utility_reg: mu_reg must be >= 0");
  }
  spec.CheckDimensions(model.n_states(), model.n_actions_min(),
                       model.n_actions_max());
  const OccupancyMeasure occ = ExactOccupancy(model, pair);
  return spec.Value(occ) - 0.5 * mu_reg * occ.marginal_max.squaredNorm();
}

namespace {

std::vector<double> RegularizedJointGradient(const UtilitySpec& spec,
                                             const OccupancyMeasure& occ,
                                             double mu_reg) {
  std::vector<double> grad = spec.JointGradient(occ);
  if (mu_reg != 0.0) {
    size_t k = 0;
    for (int s = 0; s < occ.n_states; ++s) {
      for (int a = 0; a < occ.n_actions_min; ++a) {
        for (int b = 0; b < occ.n_actions_max; ++b, ++k) {
          grad[k] -= mu_reg * occ.marginal_max(s, b);
        }
      }
    }
  }
  return grad;
}

void CheckGradArgs(const GameModel& model, const UtilitySpec& spec,
                   const PolicyPair& pair, double mu_reg) {
  CheckDimensions(model, pair);
  spec.CheckDimensions(model.n_states(), model.n_actions_min(),
                       model.n_actions_max());
  if (!(mu_reg >= 0.0)) throw ParameterError("mu_reg must be >= 0");
}

}  // namespace

Eigen::MatrixXd ExactGrad(const GameModel& model, const UtilitySpec& spec,
                          const PolicyPair& pair, Side side, double mu_reg) {
  CheckGradArgs(model, spec, pair, mu_reg);
  const int S = model.n_states();
  const int A = model.n_actions_min();
  const int B = model.n_actions_max();
  const int n = model.n_actions(side);
  const double gamma = model.discount();

  const Eigen::MatrixXd P = InducedTransition(model, pair);
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S) - gamma * P;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  // (I - gamma P^T) d = (1 - gamma) rho, with the transposed factorization.
  const Eigen::VectorXd d =
      lu.transpose().solve((1.0 - gamma) * model.initial_dist());
  const OccupancyMeasure occ =
      ProductOccupancy(d, pair, gamma, OccupancyConvention::kNormalized);

  const std::vector<double> G = RegularizedJointGradient(spec, occ, mu_reg);
  const Policy& own = pair.policy(side);
  const Eigen::MatrixXd z =
      SideReward(G, pair.policy(Opponent(side)), side, S, A, B);
  const Eigen::VectorXd r = (own.table.array() * z.array()).rowwise().sum();
  const Eigen::VectorXd v = lu.solve(r);

  Eigen::MatrixXd grad(S, n);
  const Policy& opp = pair.policy(Opponent(side));
  const int n_opp = model.n_actions(Opponent(side));
  for (int s = 0; s < S; ++s) {
    for (int i = 0; i < n; ++i) {
      double cont = 0.0;
      for (int o = 0; o < n_opp; ++o) {
        const double w = opp(s, o);
        if (w == 0.0) continue;
        const double* row =
            side == Side::kMin ? model.Slice(s, i, o) : model.Slice(s, o, i);
        double ev = 0.0;
        for (int next = 0; next < S; ++next) ev += row[next] * v(next);
        cont += w * ev;
      }
      grad(s, i) = d(s) * (z(s, i) + gamma * cont);
    }
  }
  return grad;
}

Eigen::MatrixXd ExactGradViaJacobian(const GameModel& model,
                                     const UtilitySpec& spec,
                                     const PolicyPair& pair, Side side,
                                     double mu_reg) {
  CheckGradArgs(model, spec, pair, mu_reg);
  const int S = model.n_states();
  const OccupancyMeasure occ = ExactOccupancy(model, pair);
  const std::vector<double> G = RegularizedJointGradient(spec, occ, mu_reg);
  const Eigen::MatrixXd z =
      SideReward(G, pair.policy(Opponent(side)), side, S,
                 model.n_actions_min(), model.n_actions_max());
  const Eigen::MatrixXd jac = OccupancyJacobian(model, pair, side);
  return Unflatten(jac.transpose() * Flatten(z), S, model.n_actions(side));
}

Eigen::MatrixXd ExactGradFiniteDiff(const GameModel& model,
                                    const UtilitySpec& spec,
                                    const PolicyPair& pair, Side side,
                                    double mu_reg, double step) {
  const int S = model.n_states();
  const int n = model.n_actions(side);
  Eigen::MatrixXd grad(S, n);
  for (int s = 0; s < S; ++s) {
    for (int i = 0; i < n; ++i) {
      PolicyPair plus = pair;
      PolicyPair minus = pair;
      plus.policy(side).table(s, i) += step;
      minus.policy(side).table(s, i) -= step;
      grad(s, i) = (EvalUtilityReg(model, spec, plus, mu_reg) -
                    EvalUtilityReg(model, spec, minus, mu_reg)) /
                   (2.0 * step);
    }
  }
  return grad;
}

double RegularizerBiasBound(const GameModel& model, double mu_reg) {
  if (!(mu_reg >= 0.0)) {
    throw ParameterError("regularizer_bias_bound: mu_reg must be >= 0");
  }
  return mu_reg * ComputeOccupancyConstants(model).lip_lambda;
}

double GradientDominanceModulus(const GameModel& model) {
  return (1.0 - model.discount()) * model.min_initial_mass() /
         (2.0 * std::sqrt(2.0));
}

double PplFromHiddenStrongConvexity(double smooth, double mu_c, double mu_h) {
  const double c = 1.0 + 2.0 * smooth / (2.0 * mu_c * mu_c * mu_h);
  return smooth / (1.0 + 4.0 * c * c);
}

double QgFromHiddenStrongConvexity(double mu_c, double mu_h) {
  return mu_c * mu_c * mu_h;
}

double QgFromPpl(double mu_pl) { return mu_pl; }

ModuliReport ComputeModuli(const GameModel& model, const UtilitySpec& spec,
                           double mu_reg, ConcavityRegime regime) {
  if (!(mu_reg >= 0.0)) throw ParameterError("mu_reg must be >= 0");
  const int S = model.n_states();
  const double sS = static_cast<double>(S);
  const double N = model.n_actions_min() + model.n_actions_max();
  const double gamma = model.discount();
  const double om = 1.0 - gamma;
  const double rho = model.min_initial_mass();
  const OccupancyConstants occ = ComputeOccupancyConstants(model);

  ModuliReport r;
  r.regime = regime;
  r.grad_dominance = GradientDominanceModulus(model);
  const double lip_F =
      spec.LipF(S, model.n_actions_min(), model.n_actions_max());
  const double smooth_F = spec.SmoothF();

  if (regime == ConcavityRegime::kConcave) {
    if (!(mu_reg > 0.0)) {
      throw ParameterError(
          "compute_moduli: no strong concavity available (concave regime "
          "needs mu_reg > 0)");
    }
    r.mu = mu_reg;
    // The regularized F picks up the penalty's Lipschitz and smoothness
    // constants (||lambda_2|| <= 1).
    r.lip_F = lip_F + mu_reg;
    r.smooth_F = smooth_F + mu_reg;
    r.lip_U = r.lip_F * occ.lip_lambda;
    r.smooth_U = r.smooth_F * occ.smooth_lambda;
    r.lip_U_reg = r.lip_F * std::pow(occ.lip_lambda, 3);
    r.smooth_U_reg =
        r.smooth_F * occ.smooth_lambda * occ.smooth_lambda * occ.lip_lambda;
    r.mu_qg = rho * rho * om * om * r.mu / 4.0;
    r.mu_pl = std::pow(rho, 4) * std::pow(om, 12) * r.mu * r.mu /
              (4.0 * r.smooth_F * gamma * gamma * std::pow(sS, 1.5) *
               std::pow(N, 4));
    r.smooth = r.smooth_U_reg;
    r.lip_phi = r.lip_U_reg;
  } else {
    r.mu = spec.StrongConcavity(Side::kMax) + mu_reg;
    if (!(r.mu > 0.0)) {
      throw ParameterError(
          "compute_moduli: no strong concavity available (spec has no "
          "strongly concave max-side term)");
    }
    r.lip_F = lip_F + mu_reg;
    r.smooth_F = smooth_F + mu_reg;
    r.lip_U = r.lip_F * occ.lip_lambda;
    r.smooth_U = r.smooth_F * occ.smooth_lambda;
    const auto qg = [&](double mu) { return rho * rho * om * om * mu / 4.0; };
    const auto pl = [&](double mu) {
      return std::pow(rho, 4) * std::pow(om, 7) * mu * mu /
             (4.0 * r.smooth_F * gamma * std::sqrt(sS) * std::pow(N, 1.5));
    };
    r.mu_qg = qg(r.mu);
    r.mu_pl = pl(r.mu);
    const double mu_min = spec.StrongConcavity(Side::kMin);
    if (mu_min > 0.0) {
      r.mu_qg_min = qg(mu_min);
      r.mu_pl_min = pl(mu_min);
    }
    r.smooth = r.smooth_U;
    r.lip_phi = r.lip_U;
  }
  r.kappa = r.smooth / std::sqrt(r.mu_qg * r.mu_pl);
  r.lip_maximizer = r.smooth / std::sqrt(r.mu_pl * r.mu_qg);
  r.smooth_phi = r.smooth * (1.0 + r.lip_maximizer);
  return r;
}

std::string RegimeName(ConcavityRegime regime) {
  return regime == ConcavityRegime::kConcave ? "concave" : "strongly_concave";
}

namespace {

std::string SideName(TermSide side) {
  switch (side) {
    case TermSide::kMin: return "min";
    case TermSide::kMax: return "max";
    case TermSide::kJoint: return "joint";
  }
  return "max";
}

TermSide ParseSide(const std::string& name) {
  if (name == "min") return TermSide::kMin;
  if (name == "max") return TermSide::kMax;
  if (name == "joint") return TermSide::kJoint;
  throw ParameterError("utility json: unknown side '" + name + "'");
}

}  // namespace

nlohmann::json UtilityToJson(const UtilitySpec& spec) {
  nlohmann::json doc;
  switch (spec.kind) {
    case TermKind::kLinear:
      doc = {{"kind", "linear"}, {"side", SideName(spec.side)},
             {"reward", spec.reward}};
      break;
    case TermKind::kNegSqNorm:
      doc = {{"kind", "neg_sq_norm"}, {"side", SideName(spec.side)}};
      break;
    case TermKind::kEntropy:
      doc = {{"kind", "entropy"}, {"side", SideName(spec.side)}};
      break;
    case TermKind::kSum: {
      nlohmann::json terms = nlohmann::json::array();
      for (const auto& child : spec.terms) terms.push_back(UtilityToJson(child));
      doc = {{"kind", "sum"}, {"terms", std::move(terms)}};
      break;
    }
  }
  doc["weight"] = spec.weight;
  return doc;
}

UtilitySpec UtilityFromJson(const nlohmann::json& doc) {
  try {
    const std::string kind = doc.at("kind").get<std::string>();
    const double weight = doc.value("weight", 1.0);
    if (kind == "sum") {
      std::vector<UtilitySpec> terms;
      for (const auto& t : doc.value("terms", nlohmann::json::array())) {
        terms.push_back(UtilityFromJson(t));
      }
      return UtilitySpec::Sum(std::move(terms), weight);
    }
    const TermSide side = ParseSide(doc.value("side", std::string("max")));
    if (kind == "linear") {
      return UtilitySpec::Linear(side,
                                 doc.at("reward").get<std::vector<double>>(),
                                 weight);
    }
    if (side == TermSide::kJoint) {
      throw ParameterError("utility json: '" + kind + "' needs side min/max");
    }
    const Side player = side == TermSide::kMin ? Side::kMin : Side::kMax;
    if (kind == "neg_sq_norm") return UtilitySpec::NegSqNorm(player, weight);
    if (kind == "entropy") return UtilitySpec::Entropy(player, weight);
    throw ParameterError("utility json: unknown kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("utility json: ") + e.what());
  }
}

}  // namespace cmg
