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

#include "stabren/activation.hpp"
#include "stabren/common.hpp"

namespace stabren {

/// The nine state-space blocks of a recurrent equilibrium network controller
///   xi+ = A xi + B1 w + B2 y
///   u   = C1 xi + D1 w + D2 y
///   v   = C2 xi + D3 w + D4 y,   w = phi(v)
struct RenMatrices {
  Matrix a_k, b_k1, b_k2;
  Matrix c_k1, d_k1, d_k2;
  Matrix c_k2, d_k3, d_k4;

  Eigen::Index n_xi() const { return a_k.rows(); }
  Eigen::Index n_phi() const { return d_k3.rows(); }
  Eigen::Index n_y() const { return b_k2.cols(); }
  Eigen::Index n_u() const { return c_k1.rows(); }
  void validate_shapes() const;

  static RenMatrices zeros(Eigen::Index n_xi, Eigen::Index n_phi,
                           Eigen::Index n_y, Eigen::Index n_u);
  double max_abs_diff(const RenMatrices& other) const;
};

/// Controller in its original coordinates; phi carries its sector.
struct RenParams : RenMatrices {
  Nonlinearity phi;
};

/// Loop-transformed controller. `phi` is the original activation (kept so the
/// transform can be undone); `phi_tilde` is its [-1, 1] version.
struct TransformedRenParams : RenMatrices {
  Nonlinearity phi;
  Nonlinearity phi_tilde;

  static TransformedRenParams from_matrices(RenMatrices m, Nonlinearity phi);
};

TransformedRenParams loop_transform_controller(const RenParams& theta);
RenParams inverse_loop_transform(const TransformedRenParams& theta_tilde);

/// z* = phi~(C2 xi + D3 z* + D4 y).
Vector solve_equilibrium(const TransformedRenParams& theta_tilde,
                         const Vector& xi, const Vector& y,
                         const FixedPointOptions& opts = {});

struct ControllerStep {
  Vector xi_next;
  Vector u;
  Vector z;  // z* for the transformed form, w for the original form
};

ControllerStep controller_step(const TransformedRenParams& theta_tilde,
                               const Vector& xi, const Vector& y,
                               const FixedPointOptions& opts = {});

/// Steps the untransformed network, solving w = phi(C2 xi + D3 w + D4 y) by
/// Newton's method.
ControllerStep controller_step_original(const RenParams& theta,
                                        const Vector& xi, const Vector& y,
                                        double tol = 1e-12);

/// Sensitivities of z* from the implicit function theorem,
/// dz* = (I - phi~' D3)^{-1} phi~' d(C2 xi + D3 z* + D4 y).
/// Parameter Jacobians have one column per matrix entry in column-major
/// order.
struct EquilibriumJacobian {
  Matrix core;     // (I - phi~' D3)^{-1} phi~'
  Matrix wrt_xi;   // n_phi x n_xi
  Matrix wrt_y;    // n_phi x n_y
  Matrix wrt_c_k2;
  Matrix wrt_d_k3;
  Matrix wrt_d_k4;
};

EquilibriumJacobian equilibrium_jacobian(const TransformedRenParams& theta_tilde,
                                         const Vector& xi, const Vector& y,
                                         const Vector& z_star);

/// ||Lambda^{1/2} D3 Lambda^{-1/2}||_2 for diagonal positive Lambda.
double contraction_margin(const TransformedRenParams& theta_tilde,
                          const Vector& lambda_diag);

}  // namespace stabren
