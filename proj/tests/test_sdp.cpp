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

#include "stabren/sdp.hpp"

#include "test_util.hpp"

#include <Eigen/Eigenvalues>

#include <sstream>

namespace stabren {
namespace {

using sdp::AffineSymMatrix;

Matrix sym2(const Vector& x) {
  Matrix m(2, 2);
  m << x(0), x(1), x(1), x(2);
  return m;
}

TEST(AffineSymMatrix, FromFunctionReproducesMap) {
  std::mt19937_64 rng(1);
  const Matrix c0 = testing::random_spd(rng, 3);
  const Matrix f1 = testing::randn(rng, 3, 3), f2 = testing::randn(rng, 3, 3);
  auto f = [&](const Vector& x) {
    return Matrix(c0 + x(0) * sym(f1) + x(1) * sym(f2));
  };
  const auto a = AffineSymMatrix::from_function(2, f);
  EXPECT_EQ(a.dim(), 3);
  EXPECT_EQ(a.num_vars(), 2);
  for (int t = 0; t < 5; ++t) {
    const Vector x = testing::randn(rng, 2, 1);
    EXPECT_LE(testing::max_abs(a.evaluate(x) - f(x)), 1e-14);
  }
}

TEST(AffineSymMatrix, IdentityVariableAndShift) {
  auto a = AffineSymMatrix::from_function(
      3, [](const Vector& x) { return sym2(x); });
  a.append_identity_variable(-1.0);
  a.shift_diagonal(2.0);
  Vector x(4);
  x << 1, 2, 3, 0.5;
  Matrix ref = sym2(x.head(3));
  ref.diagonal().array() += 2.0 - 0.5;
  EXPECT_LE(testing::max_abs(a.evaluate(x) - ref), 1e-15);
}

TEST(AffineSymMatrix, TripletDump) {
  auto a = AffineSymMatrix::from_function(
      3, [](const Vector& x) {
        Matrix m = sym2(x);
        m(0, 0) += 1.5;
        return m;
      });
  std::ostringstream os;
  a.write_triplets(os);
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("dim 2\nvars 3\n", 0), 0u) << s;
  EXPECT_NE(s.find("0 0 0 1.5"), std::string::npos) << s;
  EXPECT_NE(s.find("2 0 1 1"), std::string::npos) << s;
  EXPECT_EQ(s.find("2 1 0"), std::string::npos) << s;
}

// Nearest PSD matrix in the Frobenius norm: clip negative eigenvalues.
TEST(Barrier, PsdProjectionMatchesEigenClipping) {
  Matrix target(2, 2);
  target << 1.0, 2.0, 2.0, -1.5;
  Eigen::SelfAdjointEigenSolver<Matrix> es(target);
  const Vector d = es.eigenvalues().cwiseMax(0.0);
  const Matrix ref = es.eigenvectors() * d.asDiagonal() *
                     es.eigenvectors().transpose();

  sdp::BarrierProblem p;
  p.num_vars = 3;
  p.quad_weights = Vector::Ones(3);
  p.quad_weights(1) = 2.0;  // off-diagonal entry counted twice
  p.quad_center = Vector(3);
  p.quad_center << target(0, 0), target(0, 1), target(1, 1);
  p.lmis.push_back(
      AffineSymMatrix::from_function(3, [](const Vector& x) { return sym2(x); }));
  Vector x0(3);
  x0 << 1, 0, 1;
  sdp::BarrierOptions o;
  o.gap_tol = 1e-12;
  const auto r = sdp::solve_barrier(p, x0, o);
  EXPECT_LE(testing::max_abs(sym2(r.x) - ref), 1e-5);
  EXPECT_GT(min_eigenvalue(sym2(r.x)), 0.0);
  EXPECT_LE(r.gap_bound, 1e-12);
}

TEST(Barrier, LinearProgramOnBox) {
  // min x0 + 2 x1  s.t. 0 <= x <= 1, x0 + x1 >= 0.5  ->  x = (0.5, 0), value 0.5.
  sdp::BarrierProblem p;
  p.num_vars = 2;
  p.linear_cost = Vector(2);
  p.linear_cost << 1.0, 2.0;
  p.lin_a = Matrix(5, 2);
  p.lin_a << 1, 0, 0, 1, -1, 0, 0, -1, 1, 1;
  p.lin_b = Vector(5);
  p.lin_b << 0, 0, 1, 1, -0.5;
  Vector x0(2);
  x0 << 0.5, 0.5;
  sdp::BarrierOptions o;
  o.gap_tol = 1e-10;
  const auto r = sdp::solve_barrier(p, x0, o);
  EXPECT_NEAR(r.x(0), 0.5, 1e-8);
  EXPECT_NEAR(r.x(1), 0.0, 1e-8);
  EXPECT_NEAR(r.objective, 0.5, 1e-9);
}

TEST(Barrier, MaximizesMinimumEigenvalue) {
  // max t s.t. [[1, a], [a, 1]] - t I >= 0 with a fixed: t* = 1 - |a|.
  const double a = 0.3;
  sdp::BarrierProblem p;
  p.num_vars = 1;
  p.linear_cost = Vector::Constant(1, -1.0);
  auto f = AffineSymMatrix::from_function(1, [&](const Vector& x) {
    Matrix m(2, 2);
    m << 1 - x(0), a, a, 1 - x(0);
    return m;
  });
  p.lmis.push_back(f);
  sdp::BarrierOptions o;
  o.gap_tol = 1e-11;
  const auto r = sdp::solve_barrier(p, Vector::Constant(1, -1.0), o);
  EXPECT_NEAR(r.x(0), 1 - a, 1e-10);
}

TEST(Barrier, RejectsInfeasibleStart) {
  sdp::BarrierProblem p;
  p.num_vars = 3;
  p.linear_cost = Vector::Ones(3);
  p.lmis.push_back(
      AffineSymMatrix::from_function(3, [](const Vector& x) { return sym2(x); }));
  Vector x0(3);
  x0 << 1, 2, 1;  // indefinite
  try {
    sdp::solve_barrier(p, x0);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidArgument);
  }
}

TEST(Barrier, EarlyStop) {
  sdp::BarrierProblem p;
  p.num_vars = 1;
  p.linear_cost = Vector::Constant(1, -1.0);
  p.lin_a = Matrix::Constant(1, 1, -1.0);
  p.lin_b = Vector::Constant(1, 10.0);
  sdp::BarrierOptions o;
  o.stop_index = 0;
  o.stop_value = 2.0;
  const auto r = sdp::solve_barrier(p, Vector::Zero(1), o);
  EXPECT_TRUE(r.early_stop);
  EXPECT_GE(r.x(0), 2.0);
  EXPECT_LT(r.x(0), 10.0);
}

}  // namespace
}  // namespace stabren
