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

#include "stabren/ren.hpp"

#include "test_util.hpp"

#include <cmath>

namespace stabren {
namespace {

using testing::max_abs;
using testing::randn;

RenParams random_original(std::mt19937_64& rng, Eigen::Index n_xi,
                          Eigen::Index n_phi, Eigen::Index n_y,
                          Eigen::Index n_u, const Nonlinearity& phi) {
  RenParams t;
  t.a_k = randn(rng, n_xi, n_xi, 0.3);
  t.b_k1 = randn(rng, n_xi, n_phi, 0.3);
  t.b_k2 = randn(rng, n_xi, n_y, 0.3);
  t.c_k1 = randn(rng, n_u, n_xi, 0.3);
  t.d_k1 = randn(rng, n_u, n_phi, 0.3);
  t.d_k2 = randn(rng, n_u, n_y, 0.3);
  t.c_k2 = randn(rng, n_phi, n_xi, 0.3);
  t.d_k3 = randn(rng, n_phi, n_phi);
  t.d_k3 *= 0.4 / spectral_norm(t.d_k3);
  t.d_k4 = randn(rng, n_phi, n_y, 0.3);
  t.phi = phi;
  return t;
}

Nonlinearity tanh_n(Eigen::Index n) {
  return Nonlinearity::uniform(Activation::from_name("tanh"), n);
}

TEST(LoopTransform, UnitSectorIsIdentity) {
  std::mt19937_64 rng(1);
  const auto phi = Nonlinearity::with_sector(Activation::from_name("tanh"),
                                             SectorSpec::unit(3));
  const RenParams t = random_original(rng, 2, 3, 1, 1, phi);
  const TransformedRenParams tt = loop_transform_controller(t);
  EXPECT_LE(tt.max_abs_diff(t), 1e-15);
}

TEST(LoopTransform, TanhWithoutFeedthrough) {
  std::mt19937_64 rng(2);
  RenParams t = random_original(rng, 2, 3, 1, 1, tanh_n(3));
  t.d_k3.setZero();
  const TransformedRenParams tt = loop_transform_controller(t);
  EXPECT_LE(max_abs(tt.a_k - (t.a_k + 0.5 * t.b_k1 * t.c_k2)), 1e-15);
  EXPECT_LE(max_abs(tt.b_k1 - 0.5 * t.b_k1), 1e-15);
  EXPECT_LE(max_abs(tt.d_k2 - (t.d_k2 + 0.5 * t.d_k1 * t.d_k4)), 1e-15);
  EXPECT_LE(max_abs(tt.d_k3), 0.0);
}

TEST(LoopTransform, RoundTripRandom) {
  std::mt19937_64 rng(3);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const RenParams t = random_original(rng, 2, 3, 2, 1, tanh_n(3));
    const RenParams back = inverse_loop_transform(loop_transform_controller(t));
    worst = std::max(worst, back.max_abs_diff(t));
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(Equilibrium, ExplicitWithoutFeedthrough) {
  std::mt19937_64 rng(4);
  TransformedRenParams tt = testing::random_controller(rng, 2, 3, 1, 1);
  tt.d_k3.setZero();
  Vector xi = randn(rng, 2, 1), y = randn(rng, 1, 1);
  const Vector z = solve_equilibrium(tt, xi, y);
  const Vector ref = tt.phi_tilde.apply(tt.c_k2 * xi + tt.d_k4 * y);
  EXPECT_LE((z - ref).norm(), 1e-15);
  EXPECT_EQ(solve_equilibrium(tt, Vector::Zero(2), Vector::Zero(1)).norm(),
            0.0);
}

TEST(Equilibrium, ScalarMatchesBisection) {
  RenMatrices m = RenMatrices::zeros(1, 1, 1, 1);
  m.d_k3(0, 0) = 0.5;
  m.c_k2(0, 0) = 1.0;
  const auto tt = TransformedRenParams::from_matrices(m, tanh_n(1));
  for (double c : {-4.0, -0.5, 0.3, 2.0}) {
    Vector xi(1);
    xi << c;
    const double z = solve_equilibrium(tt, xi, Vector::Zero(1))(0);
    auto f = [&](double w) {
      const double v = 0.5 * w + c;
      return w - (2 * std::tanh(v) - v);
    };
    double lo = -50, hi = 50;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      ((f(mid) > 0) == (f(lo) > 0) ? lo : hi) = mid;
    }
    EXPECT_NEAR(z, 0.5 * (lo + hi), 1e-10) << c;
  }
}

TEST(ControllerStep, ZeroControllerIsZero) {
  const auto tt = TransformedRenParams::from_matrices(
      RenMatrices::zeros(2, 3, 1, 1), tanh_n(3));
  Vector xi(2), y(1);
  xi << 1.0, -2.0;
  y << 0.5;
  const auto s = controller_step(tt, xi, y);
  EXPECT_EQ(s.xi_next.norm(), 0.0);
  EXPECT_EQ(s.u.norm(), 0.0);
  EXPECT_EQ(s.z.norm(), 0.0);
}

TEST(ControllerStep, MatchesOriginalFormOverRollout) {
  std::mt19937_64 rng(5);
  const RenParams t = random_original(rng, 2, 4, 1, 1, tanh_n(4));
  const TransformedRenParams tt = loop_transform_controller(t);
  Vector xa = Vector::Zero(2), xb = Vector::Zero(2);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    Vector y(1);
    y << std::sin(0.1 * k) + 0.3 * std::cos(0.37 * k);
    const auto a = controller_step_original(t, xa, y);
    const auto b = controller_step(tt, xb, y);
    worst = std::max({worst, (a.xi_next - b.xi_next).norm(),
                      (a.u - b.u).norm()});
    xa = a.xi_next;
    xb = b.xi_next;
  }
  EXPECT_LE(worst, 1e-9);
}

TEST(ControllerStep, FeedthroughExpansion) {
  std::mt19937_64 rng(6);
  const auto tt = testing::random_controller(rng, 2, 3, 2, 2);
  Vector y = Vector::Unit(2, 0);
  const auto s = controller_step(tt, Vector::Zero(2), y);
  const Vector z = solve_equilibrium(tt, Vector::Zero(2), y);
  EXPECT_LE((s.u - (tt.d_k2.col(0) + tt.d_k1 * z)).norm(), 1e-14);
}

TEST(EquilibriumJacobian, NoFeedthroughIsChainRule) {
  std::mt19937_64 rng(7);
  auto tt = testing::random_controller(rng, 2, 3, 1, 1);
  tt.d_k3.setZero();
  const Vector xi = randn(rng, 2, 1), y = randn(rng, 1, 1);
  const Vector z = solve_equilibrium(tt, xi, y);
  const auto j = equilibrium_jacobian(tt, xi, y, z);
  const Vector sl = tt.phi_tilde.slope(tt.c_k2 * xi + tt.d_k4 * y);
  EXPECT_LE(max_abs(j.wrt_y - sl.asDiagonal() * tt.d_k4), 1e-15);
}

TEST(EquilibriumJacobian, LinearActivationClosedForm) {
  std::mt19937_64 rng(8);
  auto tt = testing::random_controller(rng, 2, 3, 2, 1);
  // phi~(v) = c v with c = 0.6: identity activation shifted and scaled.
  const double c = 0.6;
  Nonlinearity lin;
  lin.channels.assign(3, Channel{Activation::from_name("identity"), 1.0 - c,
                                 1.0});
  lin.sector = SectorSpec::unit(3);
  tt.phi_tilde = lin;
  const Vector xi = randn(rng, 2, 1), y = randn(rng, 2, 1);
  const Vector z = solve_equilibrium(tt, xi, y);
  const auto j = equilibrium_jacobian(tt, xi, y, z);
  const Matrix i3 = Matrix::Identity(3, 3);
  const Matrix core = (i3 - c * tt.d_k3).inverse() * c;
  EXPECT_LE(max_abs(j.wrt_y - core * tt.d_k4), 1e-13);
  EXPECT_LE(max_abs(j.wrt_xi - core * tt.c_k2), 1e-13);
  // Geometric series: sum_k (c D)^k c.
  Matrix series = Matrix::Zero(3, 3), term = c * i3;
  for (int k = 0; k < 200; ++k) {
    series += term;
    term = c * tt.d_k3 * term;
  }
  EXPECT_LE(max_abs(j.core - series), 1e-12);
}

TEST(EquilibriumJacobian, MatchesFiniteDifferences) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const auto tt = testing::random_controller(rng, 2, 3, 2, 1, 0.8);
    const Vector xi = randn(rng, 2, 1), y = randn(rng, 2, 1);
    FixedPointOptions fp;
    fp.tol = 1e-14;
    const Vector z = solve_equilibrium(tt, xi, y, fp);
    const auto j = equilibrium_jacobian(tt, xi, y, z);
    const double h = 1e-6;
    auto check = [&](const Matrix& analytic, auto perturbed) {
      for (Eigen::Index col = 0; col < analytic.cols(); ++col) {
        const Vector fd =
            (perturbed(col, h) - perturbed(col, -h)) / (2 * h);
        const double rel = (fd - analytic.col(col)).norm() /
                           std::max(1e-8, analytic.col(col).norm());
        EXPECT_LE(rel, 1e-5) << "column " << col;
      }
    };
    check(j.wrt_xi, [&](Eigen::Index c, double d) {
      Vector x = xi;
      x(c) += d;
      return solve_equilibrium(tt, x, y, fp);
    });
    check(j.wrt_y, [&](Eigen::Index c, double d) {
      Vector v = y;
      v(c) += d;
      return solve_equilibrium(tt, xi, v, fp);
    });
    check(j.wrt_d_k3, [&](Eigen::Index c, double d) {
      TransformedRenParams p = tt;
      p.d_k3(c % 3, c / 3) += d;
      return solve_equilibrium(p, xi, y, fp);
    });
  }
}

TEST(Contraction, Examples) {
  auto tt = TransformedRenParams::from_matrices(RenMatrices::zeros(1, 2, 1, 1),
                                                tanh_n(2));
  EXPECT_EQ(contraction_margin(tt, Vector::Ones(2)), 0.0);
  tt.d_k3 = 0.3 * Matrix::Identity(2, 2);
  Vector lam(2);
  lam << 2.0, 7.0;
  EXPECT_NEAR(contraction_margin(tt, lam), 0.3, 1e-15);
  tt.d_k3 << 0, 1, 0, 0;
  lam << 1.0, 4.0;
  EXPECT_NEAR(contraction_margin(tt, lam), 0.5, 1e-15);
  EXPECT_THROW(contraction_margin(tt, Vector::Zero(2)), Error);
}

}  // namespace
}  // namespace stabren
