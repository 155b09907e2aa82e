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

#include "stabren/certification.hpp"
#include "stabren/projection.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

#include <cmath>

namespace stabren {
namespace {

using testing::max_abs;
using testing::randn;
using namespace testing::oracles;

TEST(ClosedLoop, LtiBlocks) {
  std::mt19937_64 rng(1);
  PlantLti lti = testing::random_lti(rng, 2, 1, 1);
  auto tt = testing::random_controller(rng, 2, 3, 1, 1);
  tt.d_k2.setZero();
  const ClosedLoop cl = assemble_closed_loop(to_sector_plant(lti), tt);
  EXPECT_EQ(max_abs(cl.a_cal.topLeftCorner(2, 2) - lti.a_g), 0.0);
  EXPECT_EQ(max_abs(cl.d_cal - tt.d_k3), 0.0);
  EXPECT_EQ(cl.n_delta, 0);
}

TEST(ClosedLoop, StepMatchesComponents) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const PlantSector plant = random_sector_plant(rng);
    const auto tt = testing::random_controller(rng, 2, 3, 1, 1);
    const ClosedLoop cl = assemble_closed_loop(plant, tt);
    Vector zeta = randn(rng, 4, 1);
    Vector x = zeta.head(2), xi = zeta.tail(2);
    FixedPointOptions fp;
    fp.tol = 1e-13;
    for (int k = 0; k < 20; ++k) {
      zeta = cl.step(zeta, fp);
      const auto cs = controller_step(tt, xi, plant.c_g1 * x, fp);
      x = sector_plant_step(plant, x, cs.u, fp).x_next;
      xi = cs.xi_next;
      Vector ref(4);
      ref << x, xi;
      EXPECT_LE((zeta - ref).norm(), 1e-9) << k;
    }
  }
}

TEST(QcMatrix, UnitSector) {
  const Matrix q = qc_matrix(SectorSpec::unit(2), Vector::Ones(2));
  Matrix ref = Matrix::Zero(4, 4);
  ref.diagonal() << 2, 2, -2, -2;
  EXPECT_EQ(max_abs(q - ref), 0.0);
}

TEST(QcMatrix, TanhScalarValue) {
  const Matrix q = qc_matrix(SectorSpec::uniform(1, 0.0, 1.0), Vector::Ones(1));
  Vector s(2);
  s << 1.0, std::tanh(1.0);
  // 2 w (v - w) with w = tanh(1)
  EXPECT_NEAR(s.dot(q * s), 0.363136995139582, 1e-14);
}

TEST(QcMatrix, NonnegativeOnEveryActivation) {
  std::mt19937_64 rng(3);
  for (const char* n : {"tanh", "relu", "leaky_relu(0.1)", "v_minus_sin"}) {
    const auto phi = Nonlinearity::uniform(Activation::from_name(n), 1);
    const Matrix q = qc_matrix(phi.sector, Vector::Constant(1, 1.7));
    const Vector v = testing::uniform(rng, 10000, -15.0, 15.0);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      Vector s(2);
      s << v(i), phi.apply(v.segment(i, 1))(0);
      ASSERT_GE(s.dot(q * s), -1e-12) << n << " v=" << v(i);
    }
  }
}

TEST(LyapunovLmi, ScalarInstance) {
  ClosedLoop cl;
  cl.a_cal = Matrix::Constant(1, 1, 0.5);
  cl.b_cal = Matrix::Zero(1, 1);
  cl.c_cal = Matrix::Zero(1, 1);
  cl.d_cal = Matrix::Zero(1, 1);
  cl.psi = Nonlinearity::with_sector(Activation::from_name("tanh"),
                                     SectorSpec::unit(1));
  cl.n_g = 1;
  cl.n_phi = 1;
  const Matrix lhs =
      lyapunov_lmi_matrix(cl, Matrix::Ones(1, 1), Vector::Ones(1), 0.9);
  EXPECT_NEAR(lhs(0, 0), 0.25 - 0.81, 1e-15);
  EXPECT_NEAR(lhs(1, 1), -1.0, 1e-15);
  EXPECT_EQ(lhs(0, 1), 0.0);
  EXPECT_NEAR(check_lyapunov_lmi(cl, Matrix::Ones(1, 1), Vector::Ones(1), 0.9),
              -0.56, 1e-15);
}

TEST(LyapunovLmi, UnstableHasNoCertificate) {
  ClosedLoop cl;
  cl.a_cal = from_rows({{1.1, 0.3}, {0.0, 0.2}});
  cl.b_cal = Matrix::Zero(2, 1);
  cl.c_cal = Matrix::Zero(1, 2);
  cl.d_cal = Matrix::Zero(1, 1);
  cl.psi = Nonlinearity::with_sector(Activation::from_name("tanh"),
                                     SectorSpec::unit(1));
  cl.n_g = 1;
  cl.n_xi = 1;
  cl.n_phi = 1;
  EXPECT_GT(check_lyapunov_lmi(cl, Matrix::Identity(2, 2), Vector::Ones(1), 1.0),
            0.0);
}

TEST(BuildLmi, AffineInTheta) {
  std::mt19937_64 rng(4);
  const PlantSector plant = random_sector_plant(rng);
  const auto layout = ConvexLayout::for_plant(plant, 3);
  const ConvexParams a = layout.unpack(randn(rng, layout.size(), 1));
  const ConvexParams b = layout.unpack(randn(rng, layout.size(), 1));
  const Vector ld = Vector::Constant(1, 1.3);
  const Matrix lhs = build_lmi(convex_combination(a, b, 0.3), plant, 0.95, ld);
  const Matrix rhs = 0.3 * build_lmi(a, plant, 0.95, ld) +
                     0.7 * build_lmi(b, plant, 0.95, ld);
  EXPECT_LE(max_abs(lhs - rhs), 1e-12);
}

TEST(BuildLmi, LeadingBlock) {
  std::mt19937_64 rng(5);
  const PlantSector plant = random_sector_plant(rng);
  const auto layout = ConvexLayout::for_plant(plant, 2);
  const ConvexParams th = layout.unpack(randn(rng, layout.size(), 1));
  const double rho = 0.9;
  const Matrix m = build_lmi(th, plant, rho, Vector::Ones(1));
  Matrix ref(4, 4);
  ref << th.y_mat, Matrix::Identity(2, 2), Matrix::Identity(2, 2), th.x_mat;
  EXPECT_LE(max_abs(m.topLeftCorner(4, 4) - rho * rho * ref), 1e-14);
}

TEST(BuildLmi, AffineFamiliesAgree) {
  std::mt19937_64 rng(6);
  const PlantSector plant = random_sector_plant(rng);
  const auto layout = ConvexLayout::for_plant(plant, 3);
  const Vector v = randn(rng, layout.size(), 1);
  const Vector ld = Vector::Constant(1, 0.7);
  const Matrix direct = build_lmi(layout.unpack(v), plant, 0.97, ld);
  EXPECT_LE(max_abs(lmi_affine_in_theta(plant, 3, 0.97, ld).evaluate(v) - direct),
            1e-12);
  EXPECT_LE(max_abs(lmi_affine_in_lambda_delta(layout.unpack(v), plant, 0.97)
                        .evaluate(ld) -
                    direct),
            1e-12);
}

TEST(Convexify, CongruenceChain) {
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Instance in = random_instance(rng, 3);
    const double rho = 0.9;
    const ConvexParams th = convexify(in.tt, in.plant, in.p, in.lambda_phi);
    const Matrix built = build_lmi(th, in.plant, rho, in.lambda_delta);
    Vector lam(4);
    lam << in.lambda_delta, in.lambda_phi;
    const ClosedLoop cl = assemble_closed_loop(in.plant, in.tt);
    const Matrix ref = congruence_oracle(cl, in.p, lam, rho, ycal_of(in.p));
    worst = std::max(worst, max_abs(built - ref) / std::max(1.0, max_abs(ref)));
  }
  EXPECT_LE(worst, 1e-9);
}

TEST(Recovery, ScalarPartition) {
  PlantLti lti{Matrix::Constant(1, 1, 0.5), Matrix::Ones(1, 1),
               Matrix::Ones(1, 1)};
  const PlantSector plant = to_sector_plant(lti);
  ConvexParams th = ConvexLayout::for_plant(plant, 1).zeros();
  th.x_mat(0, 0) = 2.0;
  th.y_mat(0, 0) = 1.0;
  th.lambda_phi(0) = 1.0;
  const auto cr = recover_controller(th, plant, tanh_n(1));
  EXPECT_DOUBLE_EQ(cr.u_mat(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(cr.v_mat(0, 0), -0.5);
  // P from P Ycal = [[I, X], [0, U']] with Ycal = [[Y, I], [V', 0]].
  const Matrix ycal = from_rows({{1.0, 1.0}, {-0.5, 0.0}});
  const Matrix p = from_rows({{1.0, 2.0}, {0.0, 2.0}}) * ycal.inverse();
  EXPECT_LE(max_abs(p - from_rows({{2.0, 2.0}, {2.0, 4.0}})), 1e-15);
  EXPECT_NEAR(p.determinant(), 4.0, 1e-14);
  EXPECT_NEAR(p.inverse()(0, 0), 1.0, 1e-15);
}

TEST(Recovery, RoundTripFromFeasibleSamples) {
  const PlantSector plant = pendulum_plant();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ConvexParams th = sample_feasible(plant, 0.99, seed, 3);
    const Recovery r =
        recover_parameters(th, plant, 0.99, Vector::Ones(1), tanh_n(3));
    const auto& c = r.certificate;
    EXPECT_LT(c.margin, 0.0);
    EXPECT_TRUE(is_positive_definite(c.p_mat));
    EXPECT_LE(max_abs(c.p_mat.topLeftCorner(2, 2) - th.x_mat), 1e-9);
    EXPECT_LE(max_abs(c.p_mat.inverse().topLeftCorner(2, 2) - th.y_mat),
              1e-8 * std::max(1.0, max_abs(th.y_mat)));
    EXPECT_LE(max_abs(r.theta_tilde.d_k3 -
                      th.lambda_phi.cwiseInverse().asDiagonal() * th.d_hat_k3),
              1e-12);
    const ConvexParams back =
        convexify(r.theta_tilde, plant, c.p_mat, c.lambda_phi);
    EXPECT_LE(convex_distance(back, th) / std::max(1.0, convex_distance(th, ConvexLayout::for_plant(plant, 3).zeros())),
              1e-8);
    const ClosedLoop cl = assemble_closed_loop(plant, r.theta_tilde);
    EXPECT_LT(check_lyapunov_lmi(cl, c.p_mat, c.lambda(), 0.99), 0.0);
  }
}

TEST(Recovery, RejectsInfeasiblePoint) {
  const PlantSector plant = pendulum_plant();
  const auto layout = ConvexLayout::for_plant(plant, 2);
  ConvexParams th = layout.zeros();
  th.x_mat = -Matrix::Identity(2, 2);
  th.y_mat = Matrix::Identity(2, 2);
  th.lambda_phi.setOnes();
  try {
    recover_parameters(th, plant, 0.99, Vector::Ones(1), tanh_n(2));
    FAIL() << "expected kInfeasible";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInfeasible);
  }
}

TEST(Recovery, DifferentialMatchesFiniteDifferences) {
  const PlantSector plant = pendulum_plant();
  const ConvexParams th = sample_feasible(plant, 0.99, 11, 2);
  const auto layout = ConvexLayout::for_plant(plant, 2);
  std::mt19937_64 rng(12);
  RecoveryOptions ro;
  ro.force_u_equals_x = true;
  const auto base = recover_controller(th, plant, tanh_n(2), ro);
  for (int t = 0; t < 4; ++t) {
    Vector r = randn(rng, layout.size(), 1);
    const ConvexParams dir = layout.unpack(r / r.norm());
    const RenMatrices d = recovery_differential(th, plant, base.theta_tilde, dir);
    // The sample sits on the boundary where the recovery is strongly curved,
    // so a small step keeps the truncation error down.
    const double h = 1e-7;
    ConvexParams tp, tm;
    const Vector v = layout.pack(th), dv = layout.pack(dir);
    tp = layout.unpack(v + h * dv);
    tm = layout.unpack(v - h * dv);
    const auto rp = recover_controller(tp, plant, tanh_n(2), ro).theta_tilde;
    const auto rm = recover_controller(tm, plant, tanh_n(2), ro).theta_tilde;
    auto fd = [&](const Matrix& a, const Matrix& b) {
      return Matrix((a - b) / (2 * h));
    };
    const double scale = std::max(
        1.0, std::max({max_abs(d.a_k), max_abs(d.b_k2), max_abs(d.c_k1)}));
    EXPECT_LE(max_abs(fd(rp.a_k, rm.a_k) - d.a_k) / scale, 1e-5);
    EXPECT_LE(max_abs(fd(rp.b_k1, rm.b_k1) - d.b_k1) / scale, 1e-5);
    EXPECT_LE(max_abs(fd(rp.b_k2, rm.b_k2) - d.b_k2) / scale, 1e-5);
    EXPECT_LE(max_abs(fd(rp.c_k1, rm.c_k1) - d.c_k1) / scale, 1e-5);
    EXPECT_LE(max_abs(fd(rp.d_k1, rm.d_k1) - d.d_k1) / scale, 1e-5);
    EXPECT_LE(max_abs(fd(rp.d_k2, rm.d_k2) - d.d_k2) / scale, 1e-5);
    EXPECT_LE(max_abs(fd(rp.c_k2, rm.c_k2) - d.c_k2) / scale, 1e-5);
    EXPECT_LE(max_abs(fd(rp.d_k3, rm.d_k3) - d.d_k3) / scale, 1e-5);
    EXPECT_LE(max_abs(fd(rp.d_k4, rm.d_k4) - d.d_k4) / scale, 1e-5);
  }
}

TEST(DecayEnvelope, Examples) {
  StabilityCertificate c;
  c.rho = 0.9;
  c.p_mat = Matrix::Identity(2, 2);
  EXPECT_NEAR(decay_envelope(c, 3.0, 4), std::pow(0.9, 4) * 3.0, 1e-15);
  c.p_mat = from_rows({{4.0, 0.0}, {0.0, 1.0}});
  EXPECT_DOUBLE_EQ(decay_envelope(c, 1.0, 0), 2.0);
}

TEST(FindCertificate, StableScalarLti) {
  PlantLti lti{Matrix::Constant(1, 1, 0.5), Matrix::Ones(1, 1),
               Matrix::Ones(1, 1)};
  const auto tt = TransformedRenParams::from_matrices(
      RenMatrices::zeros(1, 1, 1, 1), tanh_n(1));
  const auto c = find_certificate(to_sector_plant(lti), tt, 0.9);
  EXPECT_LT(c.margin, 0.0);
  EXPECT_TRUE(is_positive_definite(c.p_mat));
}

TEST(FindCertificate, UnstableScalarLti) {
  PlantLti lti{Matrix::Constant(1, 1, 2.0), Matrix::Ones(1, 1),
               Matrix::Ones(1, 1)};
  const auto tt = TransformedRenParams::from_matrices(
      RenMatrices::zeros(1, 1, 1, 1), tanh_n(1));
  try {
    find_certificate(to_sector_plant(lti), tt, 0.9);
    FAIL() << "expected kInfeasible";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInfeasible);
  }
}

TEST(FindCertificate, CertifiesRecoveredController) {
  const PlantSector plant = pendulum_plant();
  const ConvexParams th = sample_feasible(plant, 0.995, 21, 2);
  const Recovery r =
      recover_parameters(th, plant, 0.995, Vector::Ones(1), tanh_n(2));
  const auto c = find_certificate(plant, r.theta_tilde, 0.995);
  EXPECT_LT(c.margin, 0.0);
}

TEST(FindCertificate, IllConditionedBoundaryControllers) {
  // These need cond(P) in the 1e4 range.
  const PlantSector plant = pendulum_plant();
  for (std::uint64_t seed : {5u, 8u}) {
    const ConvexParams th = sample_feasible(plant, 0.99, seed, 3);
    const Recovery r =
        recover_parameters(th, plant, 0.99, Vector::Ones(1), tanh_n(3));
    const auto c = find_certificate(plant, r.theta_tilde, 0.99);
    EXPECT_LT(c.margin, 0.0) << seed;
    EXPECT_GT(c.condition_number(), 1e3) << seed;
  }
}

}  // namespace
}  // namespace stabren
