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

#include "cmg/sampling.h"

#include <cmath>
#include <limits>

#include "cmg/errors.h"

namespace cmg {
namespace {

std::vector<double> RowMajor(const Eigen::MatrixXd& table) {
  std::vector<double> out(table.size());
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.cols(); ++c) {
      out[r * table.cols() + c] = table(r, c);
    }
  }
  return out;
}

}  // namespace

TrajectorySampler::TrajectorySampler(const GameModel& model,
                                     const PolicyPair& played)
    : model_(model),
      n_min_(model.n_actions_min()),
      n_max_(model.n_actions_max()),
      min_rows_(RowMajor(played.min_policy.table)),
      max_rows_(RowMajor(played.max_policy.table)),
      rho_(model.initial_dist().data(),
           model.initial_dist().data() + model.n_states()) {
  CheckDimensions(model, played);
}

Trajectory TrajectorySampler::Sample(int horizon, RngStream& rng) const {
  if (horizon < 1) throw ParameterError("sample_trajectory: horizon must be >= 1");
  Trajectory traj;
  traj.seed_tag = rng.key();
  traj.steps.resize(horizon + 1);
  const int S = model_.n_states();
  int s = rng.Categorical(rho_.data(), S);
  for (int h = 0; h <= horizon; ++h) {
    Step& step = traj.steps[h];
    step.state = s;
    step.action_min = rng.Categorical(&min_rows_[s * n_min_], n_min_);
    step.action_max = rng.Categorical(&max_rows_[s * n_max_], n_max_);
    if (h < horizon) {
      s = rng.Categorical(model_.Slice(s, step.action_min, step.action_max), S);
    }
  }
  return traj;
}

Trajectory SampleTrajectory(const GameModel& model, const PolicyPair& played,
                            int horizon, RngStream& rng) {
  return TrajectorySampler(model, played).Sample(horizon, rng);
}

OccupancyMeasure EstimateOccupancy(const std::vector<Trajectory>& trajectories,
                                   int n_states, int n_actions_min,
                                   int n_actions_max, double discount,
                                   OccupancyConvention convention) {
  if (trajectories.empty()) {
    throw ParameterError("estimate_occupancy: empty batch");
  }
  const bool normalized = convention == OccupancyConvention::kNormalized;
  std::vector<double> joint(
      static_cast<size_t>(n_states) * n_actions_min * n_actions_max, 0.0);
  for (const Trajectory& traj : trajectories) {
    double w = 1.0;
    for (size_t h = 0; h < traj.steps.size(); ++h, w *= discount) {
      if (h == 0 && !normalized) continue;
      const Step& st = traj.steps[h];
      if (st.state < 0 || st.state >= n_states || st.action_min < 0 ||
          st.action_min >= n_actions_min || st.action_max < 0 ||
          st.action_max >= n_actions_max) {
        throw ParameterError("estimate_occupancy: step out of bounds");
      }
      joint[(static_cast<size_t>(st.state) * n_actions_min + st.action_min) *
                n_actions_max +
            st.action_max] += w;
    }
  }
  const double scale = (normalized ? 1.0 - discount : 1.0) /
                       static_cast<double>(trajectories.size());
  for (double& v : joint) v *= scale;
  return OccupancyMeasure::FromJoint(n_states, n_actions_min, n_actions_max,
                                     std::move(joint), discount, convention);
}

Eigen::MatrixXd PseudoReward(const UtilitySpec& spec,
                             const OccupancyMeasure& lambda_hat,
                             const Policy& opponent_played, Side side,
                             double mu_reg) {
  for (double v : lambda_hat.joint) {
    if (!std::isfinite(v)) {
      throw ParameterError("pseudo_reward: occupancy estimate is not finite");
    }
  }
  std::vector<double> g = spec.JointGradient(lambda_hat);
  if (mu_reg != 0.0) {
    size_t k = 0;
    for (int s = 0; s < lambda_hat.n_states; ++s)
      for (int a = 0; a < lambda_hat.n_actions_min; ++a)
        for (int b = 0; b < lambda_hat.n_actions_max; ++b, ++k)
          g[k] -= mu_reg * lambda_hat.marginal_max(s, b);
  }
  return SideReward(g, opponent_played, side, lambda_hat.n_states,
                    lambda_hat.n_actions_min, lambda_hat.n_actions_max);
}

Eigen::MatrixXd ReinforceGrad(const Trajectory& trajectory, Side side,
                              const Policy& param, double epsilon,
                              const Eigen::MatrixXd& z, double discount,
                              int horizon) {
  if (horizon < 1 || horizon > trajectory.horizon() + 1) {
    throw ParameterError("reinforce_grad: horizon exceeds the trajectory");
  }
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw ParameterError("reinforce_grad: epsilon must lie in [0, 1)");
  }
  const int n = param.n_actions();
  auto action = [side](const Step& st) {
    return side == Side::kMin ? st.action_min : st.action_max;
  };
  // g[cell_h'] += score_h' * sum_{h >= h'} gamma^h z_h.
  std::vector<double> tail(horizon + 1, 0.0);
  std::vector<double> w(horizon);
  double gh = 1.0;
  for (int h = 0; h < horizon; ++h, gh *= discount) w[h] = gh;
  for (int h = horizon - 1; h >= 0; --h) {
    const Step& st = trajectory.steps[h];
    tail[h] = tail[h + 1] + w[h] * z(st.state, action(st));
  }
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(param.n_states(), n);
  for (int h = 0; h < horizon; ++h) {
    const Step& st = trajectory.steps[h];
    const int a = action(st);
    const double pi = (1.0 - epsilon) * param(st.state, a) + epsilon / n;
    if (!(pi > 0.0)) {
      throw PreconditionError(
          "reinforce_grad: zero probability at a visited cell");
    }
    grad(st.state, a) += (1.0 - epsilon) / pi * tail[h];
  }
  return grad;
}

GradEstimate BatchGrad(const GameModel& model, const UtilitySpec& spec,
                       const PolicyPair& pair, Side side,
                       const BatchConfig& config) {
  if (config.batch_size < 1 || config.horizon < 1) {
    throw ParameterError("batch_grad: batch size and horizon must be >= 1");
  }
  const int S = model.n_states();
  const int A = model.n_actions_min();
  const int B = model.n_actions_max();
  spec.CheckDimensions(S, A, B);
  const PolicyPair played = Played(pair);
  const TrajectorySampler sampler(model, played);
  const int M = config.batch_size;
  const uint64_t lane = side == Side::kMin ? 0 : 2;
  auto stream = [&](int k, uint64_t phase) {
    return RngStream(config.seed, config.iteration,
                     4 * static_cast<uint64_t>(k) + lane + phase);
  };
  const OccupancyConvention conv = config.normalized
                                       ? OccupancyConvention::kNormalized
                                       : OccupancyConvention::kTruncated;

  OccupancyMeasure lambda_hat;
  if (spec.IsLinear() && config.mu_reg == 0.0) {
    lambda_hat = OccupancyMeasure::FromJoint(
        S, A, B, std::vector<double>(static_cast<size_t>(S) * A * B, 0.0),
        model.discount(), conv);
  } else {
    std::vector<Trajectory> first;
    first.reserve(M);
    for (int k = 0; k < M; ++k) {
      RngStream rng = stream(k, 0);
      first.push_back(sampler.Sample(config.horizon, rng));
    }
    lambda_hat = EstimateOccupancy(first, S, A, B, model.discount(), conv);
  }

  GradEstimate est;
  est.batch_size = M;
  est.horizon = config.horizon;
  est.pseudo_reward = PseudoReward(spec, lambda_hat,
                                   played.policy(Opponent(side)), side,
                                   config.mu_reg);
  const double scale = config.normalized ? 1.0 - model.discount() : 1.0;
  est.gradient = Eigen::MatrixXd::Zero(S, model.n_actions(side));
  Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(S, model.n_actions(side));
  double second = 0.0;
  for (int k = 0; k < M; ++k) {
    RngStream rng = stream(k, 1);
    const Trajectory traj = sampler.Sample(config.horizon, rng);
    const Eigen::MatrixXd g =
        scale * ReinforceGrad(traj, side, pair.policy(side),
                              pair.explore(side), est.pseudo_reward,
                              model.discount(), config.horizon);
    est.gradient += g;
    sq += g.cwiseProduct(g);
    second += g.squaredNorm();
  }
  est.gradient /= M;
  est.sample_variance =
      M > 1 ? ((sq / M - est.gradient.cwiseProduct(est.gradient)) *
               (static_cast<double>(M) / (M - 1)))
                  .cwiseMax(0.0)
                  .eval()
            : Eigen::MatrixXd::Zero(S, model.n_actions(side));
  est.empirical_second_moment = second / M;
  if (!est.gradient.allFinite()) {
    throw InternalError("batch_grad: non-finite gradient estimate");
  }
  return est;
}

EstimatorBounds ComputeEstimatorBounds(double lip_F, double discount,
                                       double epsilon, int batch_size,
                                       int horizon) {
  if (!(epsilon > 0.0) || !(discount >= 0.0 && discount < 1.0) ||
      batch_size < 1 || horizon < 1 || !(lip_F >= 0.0)) {
    throw ParameterError(
        "estimator_bounds: need eps > 0, gamma in [0, 1), M >= 1, H >= 1");
  }
  const double om6 = std::pow(1.0 - discount, 6);
  EstimatorBounds b;
  b.variance_bound =
      27.0 * lip_F * lip_F / (batch_size * om6 * epsilon * epsilon);
  b.bias_bound = 256.0 * lip_F / (om6 * epsilon * epsilon) *
                 std::exp(-(1.0 - discount) * (horizon - 1));
  const double threshold =
      discount > 0.0 ? 1.0 / std::log(1.0 / std::sqrt(discount)) : 0.0;
  if (!(horizon > threshold)) {
    b.bias_valid = false;
    b.warning = "bias bound requires H > " + std::to_string(threshold);
  }
  return b;
}

nlohmann::json TrajectoryToJson(const Trajectory& trajectory) {
  nlohmann::json steps = nlohmann::json::array();
  for (const Step& st : trajectory.steps) {
    steps.push_back({st.state, st.action_min, st.action_max});
  }
  return {{"seed_tag", trajectory.seed_tag}, {"steps", std::move(steps)}};
}

}  // namespace cmg
