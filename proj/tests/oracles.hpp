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

// Reference constructions shared by the unit tests and the acceptance run.

#include "stabren/certification.hpp"

#include "test_util.hpp"

namespace stabren::testing::oracles {

inline Nonlinearity tanh_n(Eigen::Index n) {
  return Nonlinearity::uniform(Activation::from_name("tanh"), n);
}

inline PlantSector random_sector_plant(std::mt19937_64& rng) {
  PlantSector p;
  p.a_g = randn(rng, 2, 2, 0.5);
  p.b_g1 = randn(rng, 2, 1, 0.5);
  p.b_g2 = randn(rng, 2, 1);
  p.c_g1 = randn(rng, 1, 2);
  p.c_g2 = randn(rng, 1, 2);
  p.d_g3 = Matrix::Constant(1, 1, 0.3);
  p.delta = tanh_n(1);
  p.validate();
  return p;
}


// Schur form of the Lyapunov condition written out from the closed loop,
// followed by the congruence with diag(Ycal, I, P Ycal, Lambda).
inline Matrix congruence_oracle(const ClosedLoop& cl, const Matrix& p, const Vector& lam,
                         double rho, const Matrix& ycal) {
  const auto ns = cl.n_state(), nn = cl.n_nl();
  const Matrix L = lam.asDiagonal();
  Matrix s = Matrix::Zero(2 * ns + 2 * nn, 2 * ns + 2 * nn);
  const auto o1 = ns, o2 = ns + nn, o3 = 2 * ns + nn;
  s.block(0, 0, ns, ns) = rho * rho * p;
  s.block(o1, o1, nn, nn) = L;
  s.block(o2, o2, ns, ns) = p.inverse();
  s.block(o3, o3, nn, nn) = L.inverse();
  s.block(o2, 0, ns, ns) = cl.a_cal;
  s.block(o2, o1, ns, nn) = cl.b_cal;
  s.block(o3, 0, nn, ns) = cl.c_cal;
  s.block(o3, o1, nn, nn) = cl.d_cal;
  s = Matrix(s.selfadjointView<Eigen::Lower>());
  Matrix t = Matrix::Zero(s.rows(), s.cols());
  t.block(0, 0, ns, ns) = ycal;
  t.block(o1, o1, nn, nn).setIdentity();
  t.block(o2, o2, ns, ns) = p * ycal;
  t.block(o3, o3, nn, nn) = L;
  return t.transpose() * s * t;
}

struct Instance {
  PlantSector plant;
  TransformedRenParams tt;
  Matrix p;
  Vector lambda_delta, lambda_phi;
};

inline Instance random_instance(std::mt19937_64& rng, Eigen::Index n_phi) {
  Instance in;
  in.plant = random_sector_plant(rng);
  in.tt = testing::random_controller(rng, 2, n_phi, 1, 1);
  in.p = testing::random_spd(rng, 4);
  in.lambda_delta = testing::uniform(rng, 1, 0.5, 2.0);
  in.lambda_phi = testing::uniform(rng, n_phi, 0.5, 2.0);
  return in;
}

inline Matrix ycal_of(const Matrix& p) {
  const auto n = p.rows() / 2;
  const Matrix pinv = p.inverse();
  Matrix y = Matrix::Zero(2 * n, 2 * n);
  y.topLeftCorner(n, n) = pinv.topLeftCorner(n, n);
  y.topRightCorner(n, n).setIdentity();
  y.bottomLeftCorner(n, n) = pinv.topRightCorner(n, n).transpose();
  return y;
}

}  // namespace stabren::testing::oracles
