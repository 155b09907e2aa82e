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

#include "stabren/common.hpp"
#include "stabren/plant.hpp"
#include "stabren/ren.hpp"
#include "stabren/sdp.hpp"

namespace stabren {

/// Interconnection of a loop-transformed plant and controller:
///   zeta+ = A zeta + B t,  s = C zeta + D t,  t = psi(s),
/// with zeta = [x; xi], s = [p; v], t = [q; z] and psi = [Delta~; phi~].
struct ClosedLoop {
  Matrix a_cal, b_cal, c_cal, d_cal;
  Nonlinearity psi;
  Eigen::Index n_g = 0, n_xi = 0, n_delta = 0, n_phi = 0;

  Eigen::Index n_state() const { return n_g + n_xi; }
  Eigen::Index n_nl() const { return n_delta + n_phi; }

  /// Solves the stacked implicit equation and advances zeta.
  Vector step(const Vector& zeta, const FixedPointOptions& opts = {}) const;
};

/// Loop-transforms `plant` (idempotent for already transformed plants) and
/// interconnects it with the transformed controller.
ClosedLoop assemble_closed_loop(const PlantSector& plant,
                                const TransformedRenParams& theta_tilde);

/// Quadratic-constraint matrix [[-2 A B L, (A + B) L], [(A + B) L, -2 L]]
/// for the sector [alpha, beta] with multiplier L = diag(lambda) >= 0.
Matrix qc_matrix(const SectorSpec& sector, const Vector& lambda);

/// Left-hand side of the discrete Lyapunov/S-procedure condition:
/// [[A'PA - rho^2 P, A'PB], [B'PA, B'PB]] + [C D; 0 I]' diag(L, -L) [C D; 0 I].
Matrix lyapunov_lmi_matrix(const ClosedLoop& loop, const Matrix& p_mat,
                           const Vector& lambda, double rho);

/// Maximum eigenvalue of `lyapunov_lmi_matrix`; negative certifies
/// exponential stability with rate rho.
double check_lyapunov_lmi(const ClosedLoop& loop, const Matrix& p_mat,
                          const Vector& lambda, double rho);

/// Schur-complement form [[rho^2 P, 0, A', C'], [0, L, B', D'],
/// [A, B, P^-1, 0], [C, D, 0, L^-1]].
Matrix schur_lyapunov_matrix(const ClosedLoop& loop, const Matrix& p_mat,
                             const Vector& lambda, double rho);

/// Convex decision variables. lambda_phi holds the diagonal of Lambda_phi.
struct ConvexParams {
  Matrix x_mat;        // n_g x n_g symmetric
  Matrix y_mat;        // n_g x n_g symmetric
  Matrix n_mat;        // (n_xi + n_u) x (n_xi + n_y)
  Vector lambda_phi;   // n_phi
  Matrix d_k1_tilde;   // n_u x n_phi
  Matrix n_hat_12;     // n_xi x n_phi
  Matrix n_hat_21;     // n_phi x n_g
  Matrix d_hat_k3;     // n_phi x n_phi
  Matrix d_hat_k4;     // n_phi x n_y
};

/// Sizes of the convex parameterization and its vector packing. Symmetric
/// blocks store their upper triangle; the packing weights make the squared
/// weighted Euclidean norm equal the Frobenius norm over all blocks.
struct ConvexLayout {
  Eigen::Index n_g = 0, n_u = 0, n_y = 0, n_phi = 0;

  Eigen::Index n_xi() const { return n_g; }
  Eigen::Index size() const;
  Vector pack(const ConvexParams& p) const;
  ConvexParams unpack(const Vector& v) const;
  Vector frobenius_weights() const;
  ConvexParams zeros() const;
  void check(const ConvexParams& p) const;

  static ConvexLayout for_plant(const PlantSector& plant, Eigen::Index n_phi);
};

/// Frobenius distance over all blocks.
double convex_distance(const ConvexParams& a, const ConvexParams& b);
ConvexParams convex_combination(const ConvexParams& a, const ConvexParams& b,
                                double weight_a);

/// The LMI in the convex variables (the congruence-transformed Schur form
/// with Lambda = diag(lambda_delta, lambda_phi)); affine in theta_hat for
/// fixed lambda_delta and affine in lambda_delta for fixed theta_hat.
/// lambda_delta must be empty exactly when the plant has no nonlinearity.
Matrix build_lmi(const ConvexParams& theta_hat, const PlantSector& plant,
                 double rho, const Vector& lambda_delta);

/// build_lmi as an affine family in the packed theta_hat vector.
sdp::AffineSymMatrix lmi_affine_in_theta(const PlantSector& plant,
                                         Eigen::Index n_phi, double rho,
                                         const Vector& lambda_delta);

/// build_lmi as an affine family in lambda_delta.
sdp::AffineSymMatrix lmi_affine_in_lambda_delta(const ConvexParams& theta_hat,
                                                const PlantSector& plant,
                                                double rho);

/// Convex variables of a given controller and Lyapunov certificate (the
/// change of variables); P is partitioned as [[X, U], [U', *]] and
/// P^-1 as [[Y, V], [V', *]].
ConvexParams convexify(const TransformedRenParams& theta_tilde,
                       const PlantSector& plant, const Matrix& p_mat,
                       const Vector& lambda_phi);

struct StabilityCertificate {
  Matrix p_mat;
  Vector lambda_delta;
  Vector lambda_phi;
  double rho = 0.0;
  double margin = 0.0;  // max eigenvalue of the Lyapunov LMI; < 0
  Matrix u_mat, v_mat;
  Matrix x_hat, y_hat;  // remaining partition blocks of P and P^-1

  Vector lambda() const;
  double condition_number() const;
};

struct RecoveryOptions {
  double singular_v_threshold = 1e8;  // ||V^-1|| above which SVD is used
  bool force_u_equals_x = false;
};

struct Recovery {
  TransformedRenParams theta_tilde;
  StabilityCertificate certificate;
  bool used_svd = false;
};

struct ControllerRecovery {
  TransformedRenParams theta_tilde;
  Matrix u_mat, v_mat;
  bool used_svd = false;
};

/// The controller half of the recovery without any feasibility check; used
/// for gradients and finite differences, where theta_hat may sit on or just
/// outside the boundary.
ControllerRecovery recover_controller(const ConvexParams& theta_hat,
                                      const PlantSector& plant,
                                      const Nonlinearity& phi,
                                      const RecoveryOptions& opts = {});

/// Directional derivative of the U = X recovery at theta_hat along d_theta.
/// `theta_tilde` must be the U = X recovery at theta_hat.
RenMatrices recovery_differential(const ConvexParams& theta_hat,
                                  const PlantSector& plant,
                                  const TransformedRenParams& theta_tilde,
                                  const ConvexParams& d_theta);

/// Recovers controller and certificate from a feasible theta_hat (U = X,
/// V = X^-1 - Y; SVD factorization of I - XY when V is near singular).
Recovery recover_parameters(const ConvexParams& theta_hat,
                            const PlantSector& plant, double rho,
                            const Vector& lambda_delta,
                            const Nonlinearity& phi,
                            const RecoveryOptions& opts = {});

/// sqrt(cond(P)) rho^k ||x0||.
double decay_envelope(const StabilityCertificate& cert, double x0_norm, int k);

/// Searches (P, Lambda) certifying a fixed controller by maximizing the
/// Lyapunov LMI slack subject to P >= I, Lambda >= I (a normalization; the
/// condition is homogeneous). Throws kInfeasible when no certificate exists
/// with slack above `min_slack`.
StabilityCertificate find_certificate(const PlantSector& plant,
                                      const TransformedRenParams& theta_tilde,
                                      double rho, double min_slack = 1e-9);

}  // namespace stabren
