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

#include "stabren/projection.hpp"
#include "stabren/training.hpp"

#include "test_util.hpp"

#include <sstream>

namespace stabren {
namespace {

using testing::randn;

PlantSector scalar_plant() {
  PlantLti lti{Matrix::Constant(1, 1, 1.2), Matrix::Ones(1, 1),
               Matrix::Ones(1, 1)};
  return to_sector_plant(lti);
}

ProjectionProblem problem(const ConvexParams& target, const PlantSector& plant,
                          double rho) {
  ProjectionProblem p;
  p.target = target;
  p.plant = plant;
  p.rho = rho;
  p.lambda_delta = Vector::Ones(plant.n_delta());
  return p;
}

TEST(Projection, FeasibleTargetUnchanged) {
  const PlantSector plant = pendulum_plant();
  const ConvexParams th = sample_feasible(plant, 0.99, 1, 2);
  // Move strictly inside: the sample sits at margin eps.
  ProjectionOptions o;
  o.eps = 1e-3;
  const ConvexParams inner = find_feasible(plant, 2, 0.99, Vector::Ones(1), 1e-2, o);
  const auto r = project(problem(inner, plant, 0.99));
  EXPECT_TRUE(r.unchanged);
  EXPECT_LE(convex_distance(r.theta_hat, inner), 1e-6);
  EXPECT_GE(feasibility_margin(th, plant, 0.99, Vector::Ones(1)), 1e-6 - 1e-8);
}

TEST(Projection, MarginAndIdempotence) {
  const PlantSector plant = pendulum_plant();
  const auto layout = ConvexLayout::for_plant(plant, 2);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 3; ++t) {
    const ConvexParams target = layout.unpack(randn(rng, layout.size(), 1));
    const auto r1 = project(problem(target, plant, 0.99));
    EXPECT_GE(r1.margin, 1e-6 - 1e-8);
    EXPECT_GE(feasibility_margin(r1.theta_hat, plant, 0.99, Vector::Ones(1)),
              1e-6 - 1e-8);
    EXPECT_NEAR(r1.distance, convex_distance(r1.theta_hat, target), 1e-9);
    const auto r2 = project(problem(r1.theta_hat, plant, 0.99));
    EXPECT_LE(convex_distance(r2.theta_hat, r1.theta_hat), 1e-6);
  }
}

TEST(Projection, NoFeasibleCandidateIsCloser) {
  const PlantSector plant = scalar_plant();
  const double rho = 0.95;
  const ConvexParams boundary = sample_feasible(plant, rho, 3, 2);
  const auto layout = ConvexLayout::for_plant(plant, 2);
  const ConvexParams target =
      layout.unpack(2.0 * layout.pack(boundary));
  const auto r = project(problem(target, plant, rho));
  for (std::uint64_t s = 100; s < 200; ++s) {
    const ConvexParams c = sample_feasible(plant, rho, s, 2);
    EXPECT_LE(r.distance, convex_distance(target, c) + 1e-9) << s;
  }
}

TEST(Projection, WarmStartGivesSamePoint) {
  const PlantSector plant = pendulum_plant();
  const auto layout = ConvexLayout::for_plant(plant, 2);
  std::mt19937_64 rng(4);
  const ConvexParams start = sample_feasible(plant, 0.99, 4, 2);
  const ConvexParams target = layout.unpack(layout.pack(start) +
                                            0.5 * randn(rng, layout.size(), 1));
  auto cold = problem(target, plant, 0.99);
  auto warm = cold;
  warm.warm_start = start;
  const auto a = project(cold), b = project(warm);
  EXPECT_LE(convex_distance(a.theta_hat, b.theta_hat), 1e-5);
}

TEST(Projection, ProgramDump) {
  const PlantSector plant = scalar_plant();
  const auto layout = ConvexLayout::for_plant(plant, 1);
  std::ostringstream os;
  write_projection_program(problem(layout.zeros(), plant, 0.9), 1e-6, os);
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("dim ", 0), 0u);
  EXPECT_NE(s.find("\nvars " + std::to_string(layout.size()) + "\n"),
            std::string::npos);
  EXPECT_NE(s.find("\ntarget "), std::string::npos);
  EXPECT_NE(s.find("\nweights "), std::string::npos);
}

TEST(Recenter, LtiPlantIsNoOp) {
  const PlantSector plant = scalar_plant();
  const ConvexParams th = sample_feasible(plant, 0.95, 5, 1);
  EXPECT_EQ(recenter_lambda(th, plant, 0.95, Vector()).size(), 0);
}

TEST(Recenter, NeverWorseThanIdentityAndMatchesGrid) {
  const PlantSector plant = pendulum_plant();
  for (std::uint64_t seed : {6u, 7u}) {
    const ConvexParams th = sample_feasible(plant, 0.99, seed, 2);
    const double at_one = feasibility_margin(th, plant, 0.99, Vector::Ones(1));
    const Vector best = recenter_lambda(th, plant, 0.99, Vector::Ones(1));
    const double m = feasibility_margin(th, plant, 0.99, best);
    EXPECT_GE(m, at_one - 1e-12);
    // Grid oracle on a log scale, refined around its best cell.
    double g_best = -1e300, g_arg = 1.0;
    for (double e = -6; e <= 6; e += 0.01) {
      const double lam = std::pow(10.0, e);
      const double v =
          feasibility_margin(th, plant, 0.99, Vector::Constant(1, lam));
      if (v > g_best) g_best = v, g_arg = lam;
    }
    for (double lam = g_arg * 0.97; lam <= g_arg * 1.03; lam += g_arg * 1e-4) {
      g_best = std::max(
          g_best, feasibility_margin(th, plant, 0.99, Vector::Constant(1, lam)));
    }
    EXPECT_NEAR(m, g_best, 1e-4);
  }
}

TEST(SampleFeasible, MarginDeterminismAndEnvelope) {
  const PlantSector plant = pendulum_plant();
  const ConvexParams a = sample_feasible(plant, 0.99, 8, 3);
  const ConvexParams b = sample_feasible(plant, 0.99, 8, 3);
  EXPECT_EQ(convex_distance(a, b), 0.0);
  EXPECT_GE(feasibility_margin(a, plant, 0.99, Vector::Ones(1)), 1e-6 - 1e-8);
  const Recovery r = recover_parameters(
      a, plant, 0.99, Vector::Ones(1),
      Nonlinearity::uniform(Activation::from_name("tanh"), 3));
  std::mt19937_64 rng(8);
  for (int i = 0; i < 10; ++i) {
    const Vector x0 = testing::uniform(rng, 2, -1.0, 1.0);
    EXPECT_LE(envelope_excess(plant, r.theta_tilde, r.certificate, x0, 500),
              1e-8);
  }
}

TEST(FeasibilityMargin, ConcaveAlongSegments) {
  const PlantSector plant = pendulum_plant();
  for (std::uint64_t s = 9; s < 12; ++s) {
    const ConvexParams a = sample_feasible(plant, 0.99, s, 2);
    const ConvexParams b = sample_feasible(plant, 0.99, s + 100, 2);
    const Vector ones = Vector::Ones(1);
    for (double w : {0.25, 0.5, 0.75}) {
      const double mid =
          feasibility_margin(convex_combination(a, b, w), plant, 0.99, ones);
      const double chord = w * feasibility_margin(a, plant, 0.99, ones) +
                           (1 - w) * feasibility_margin(b, plant, 0.99, ones);
      EXPECT_GE(mid, chord - 1e-9);
    }
  }
}

TEST(FeasibilityMargin, ScalarPipelineInstance) {
  // n_G = n_xi = 1, zero controller; margin from the congruence written out
  // by hand.
  PlantLti lti{Matrix::Constant(1, 1, 0.5), Matrix::Ones(1, 1),
               Matrix::Ones(1, 1)};
  const PlantSector plant = to_sector_plant(lti);
  const auto tt = TransformedRenParams::from_matrices(
      RenMatrices::zeros(1, 1, 1, 1),
      Nonlinearity::uniform(Activation::from_name("tanh"), 1));
  const Matrix p = from_rows({{2.0, 1.0}, {1.0, 3.0}});
  const double rho = 0.9, lam = 1.5;
  const ConvexParams th = convexify(tt, plant, p, Vector::Constant(1, lam));
  // Closed loop: A = diag(0.5, 0), B = 0, C = 0, D = 0, one channel.
  const Matrix pinv = p.inverse();
  Matrix ycal(2, 2);
  ycal << pinv(0, 0), 1.0, pinv(0, 1), 0.0;
  const Matrix a = from_rows({{0.5, 0.0}, {0.0, 0.0}});
  Matrix m = Matrix::Zero(6, 6);
  m.block(0, 0, 2, 2) = rho * rho * ycal.transpose() * p * ycal;
  m(2, 2) = lam;
  m.block(3, 3, 2, 2) = ycal.transpose() * p * ycal;
  m(5, 5) = lam;
  m.block(3, 0, 2, 2) = ycal.transpose() * p * a * ycal;
  m.block(0, 3, 2, 2) = m.block(3, 0, 2, 2).transpose();
  const double ref = min_eigenvalue(m);
  EXPECT_NEAR(feasibility_margin(th, plant, rho, Vector()), ref, 1e-9);
}

}  // namespace
}  // namespace stabren
