/*
 * Copyright 2026 The stabren Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "stabren/projection.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace stabren {

/// Per-step reward r_k(x, u), horizon T and a termination predicate. Steps
/// k = 0..T are scored; once the predicate holds at step l, rewards for
/// k >= l are zero and the rollout stops.
struct RewardOracle {
  std::string name;
  int horizon = 200;
  std::function<double(const Vector& x, const Vector& u, int k)> reward;
  // Partial derivatives of r_k; required for analytic gradients.
  std::function<void(const Vector& x, const Vector& u, int k, Vector& d_x,
                     Vector& d_u)>
      reward_grad;
  std::function<bool(const Vector& x)> terminated;  // empty: never

  /// bias - u'u, terminating when |x_0| >= angle_limit.
  static RewardOracle bias_minus_effort(int horizon, double bias = 4.0,
                                        double angle_limit = 3.14159265358979323846);
  /// bias - x'Qx - u'Ru, terminating when |x_0| >= angle_limit.
  static RewardOracle bias_minus_quadratic(const Matrix& q, const Matrix& r,
                                           int horizon, double bias = 5.0,
                                           double angle_limit = 3.14159265358979323846);
};

struct RolloutRecord {
  std::vector<Vector> x;    // x(0..n_steps), plus x(l) on termination
  std::vector<Vector> xi;   // same length as x
  std::vector<Vector> u;    // n_steps entries
  std::vector<Vector> y;
  std::vector<Vector> z;    // equilibrium solutions
  std::vector<double> rewards;  // horizon + 1 entries, zero after termination
  int termination_step = -1;    // -1: ran to the horizon
  double total_reward = 0.0;
};

/// Closed-loop simulation from xi(0) = 0: the controller acts on y = C1 x,
/// then the plant steps. Equilibrium solve failures propagate with the step
/// index in the message.
RolloutRecord rollout(const PlantSector& plant,
                      const TransformedRenParams& theta_tilde,
                      const Vector& x0, const RewardOracle& oracle);

/// Total reward of one rollout and, through reverse-mode differentiation of
/// the rollout, its gradient with respect to the transformed controller
/// blocks.
double rollout_gradient(const PlantSector& plant,
                        const TransformedRenParams& theta_tilde,
                        const Vector& x0, const RewardOracle& oracle,
                        RenMatrices& grad);

enum class GradMode { kAnalytic, kFiniteDifference };

struct PolicyGradient {
  ConvexParams grad;        // d(mean reward)/d(block entries)
  double mean_reward = 0.0;
  double norm() const;
};

/// Gradient of the mean total reward over `x0s` with respect to theta_hat.
/// The controller is recovered on `model` (with U = X); rollouts run on
/// `rollout_plant`. Finite-difference mode uses central differences of
/// step `fd_step` on every free entry.
PolicyGradient policy_gradient(const PlantSector& model,
                               const PlantSector& rollout_plant,
                               const ConvexParams& theta_hat,
                               const Nonlinearity& phi,
                               const RewardOracle& oracle,
                               const std::vector<Vector>& x0s, GradMode mode,
                               double fd_step = 1e-6);

struct TrainConfig {
  PlantSector plant;                        // projection and certification
  std::optional<PlantSector> rollout_plant; // rollouts; defaults to plant
  double rho = 0.999;
  Eigen::Index n_phi = 4;
  Activation activation{ActivationKind::kTanh, 0.0};
  Vector x0_low, x0_high;   // initial-state sampling box
  int horizon = 200;
  double learning_rate = 1e-3;
  bool halve_on_decrease = false;
  double grad_clip = 0.0;   // max gradient norm; 0 disables clipping
  GradMode grad_mode = GradMode::kAnalytic;
  int batch_size = 16;
  int eval_batch_size = 16; // fixed evaluation states for best-iterate tracking
  int iterations = 50;
  int validation_steps = 500;
  std::uint64_t seed = 0;
  double eps = 1e-6;

  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double mean_reward = 0.0;   // training batch
  double eval_reward = 0.0;   // fixed evaluation batch
  double lmi_margin = 0.0;    // min eigenvalue of the convex LMI
  double certificate_margin = 0.0;  // Lyapunov LMI max eigenvalue (< 0)
  double grad_norm = 0.0;
  double projection_distance = 0.0;
  double learning_rate = 0.0;
  double wall_time = 0.0;
};

struct TrainResult {
  ConvexParams theta_hat;
  TransformedRenParams theta_tilde;
  StabilityCertificate certificate;
  Vector lambda_delta;
  int best_iteration = 0;
  ConvexParams best_theta_hat;
  TransformedRenParams best_theta_tilde;
  StabilityCertificate best_certificate;
  std::vector<IterationRecord> history;
  std::vector<std::string> trace;  // "sample", "step", "project", "recenter", "certify"
};

using TrainCallback = std::function<void(const IterationRecord&)>;

/// Projected policy gradient: sample a feasible theta_hat, then repeat
/// {gradient step, projection, Lambda_Delta re-centering for sector plants}.
/// Every iterate is recovered, certified and checked on one validation
/// rollout before its rollouts are used; failures raise kEnvelopeViolation
/// or kNumeric.
TrainResult train(const TrainConfig& config, const RewardOracle& oracle,
                  const TrainCallback& on_iteration = {});

/// Checks ||zeta(k)|| <= sqrt(cond P) rho^k ||zeta(0)|| + tol on the model
/// closed loop; returns the worst excess (<= 0 when satisfied).
double envelope_excess(const PlantSector& plant,
                       const TransformedRenParams& theta_tilde,
                       const StabilityCertificate& cert, const Vector& x0,
                       int steps);

}  // namespace stabren
