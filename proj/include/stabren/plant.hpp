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

/// x+ = A x + B u,  y = C x.
struct PlantLti {
  Matrix a_g;
  Matrix b_g;
  Matrix c_g;

  Eigen::Index n_state() const { return a_g.rows(); }
  Eigen::Index n_input() const { return b_g.cols(); }
  Eigen::Index n_output() const { return c_g.rows(); }
  void validate() const;
};

/// LTI system G in feedback with an elementwise sector-bounded Delta:
///   x+ = A x + B1 q' + B2 u,  y = C1 x,  p = C2 x + D3 q',  q' = Delta(p).
struct PlantSector {
  Matrix a_g;
  Matrix b_g1;
  Matrix b_g2;
  Matrix c_g1;
  Matrix c_g2;
  Matrix d_g3;
  Nonlinearity delta;

  Eigen::Index n_state() const { return a_g.rows(); }
  Eigen::Index n_input() const { return b_g2.cols(); }
  Eigen::Index n_output() const { return c_g1.rows(); }
  Eigen::Index n_delta() const { return delta.size(); }

  /// Shapes, finiteness, sectors and well-posedness of the q' equation.
  void validate() const;
};

/// Implicit neural-network plant
///   x+ = A x + B1 q' + B2 u,  q' = Delta(C2 x + D3 q'),  y = C1 x.
struct ImplicitNnPlant {
  Matrix a;
  Matrix b1;
  Matrix b2;
  Matrix c1;
  Matrix c2;
  Matrix d3;
  Nonlinearity delta;

  Eigen::Index n_state() const { return a.rows(); }
  Eigen::Index n_input() const { return b2.cols(); }
  Eigen::Index n_hidden() const { return d3.rows(); }
  void validate() const;
};

struct LtiStep {
  Vector x_next;
  Vector y;
};

struct SectorStep {
  Vector x_next;
  Vector y;
  Vector p;
  Vector q_prime;
};

/// Norm used for the well-posedness test of D3 / D_G3 (plain spectral norm).
double well_posedness_norm(const Matrix& d);

LtiStep lti_step(const PlantLti& plant, const Vector& x, const Vector& u);

SectorStep sector_plant_step(const PlantSector& plant, const Vector& x,
                             const Vector& u,
                             const FixedPointOptions& opts = {});

/// Equivalent plant whose nonlinearity lies in [-1, 1]. Channels with
/// alpha_i == beta_i are linear and are folded into the LTI part.
PlantSector loop_transform_plant(const PlantSector& plant);

/// Solves the hidden equation and returns (x_next, q').
Vector implicit_nn_forward(const ImplicitNnPlant& nn, const Vector& x,
                           const Vector& u, const FixedPointOptions& opts = {});
Vector implicit_nn_hidden(const ImplicitNnPlant& nn, const Vector& x,
                          const FixedPointOptions& opts = {});

PlantSector to_sector_plant(const PlantLti& plant);
PlantSector to_sector_plant(const ImplicitNnPlant& nn);

struct PendulumParams {
  double dt = 0.02;        // sampling time [s]
  double mass = 0.15;      // [kg]
  double length = 0.5;     // [m]
  double friction = 0.5;   // [N m s / rad]
  double gravity = 9.81;   // [m / s^2]
};

/// Inverted pendulum with Delta(v) = v - sin(v) on the angle channel and the
/// sector taken from the slope restriction [0, 2].
PlantSector pendulum_plant(const PendulumParams& params = {});

/// The pendulum's linear part A_G, B_G2 (input), C_G1.
PlantLti pendulum_linear_part(const PendulumParams& params = {});

}  // namespace stabren
