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

#include "stabren/certification.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace stabren {

struct ProjectionOptions {
  double eps = 1e-6;           // required LMI margin
  double lambda_max = 1e6;     // upper bound on Lambda_Delta when re-centering
  double phase1_box = 1e4;     // |theta_i| bound in the phase-I search
  sdp::BarrierOptions barrier;
};

struct ProjectionProblem {
  ConvexParams target;
  PlantSector plant;
  double rho = 0.0;
  Vector lambda_delta;   // size n_Delta (empty for LTI plants)
  Vector weights;        // per packed entry; empty = plain Frobenius
  std::optional<ConvexParams> warm_start;  // must satisfy the LMI strictly
};

struct ProjectionResult {
  ConvexParams theta_hat;
  double distance = 0.0;  // Frobenius distance to the target
  double margin = 0.0;    // min eigenvalue of build_lmi at the result
  bool unchanged = false; // target was already feasible
  int newton_steps = 0;
};

/// lambda_min(build_lmi(theta_hat, lambda_delta)).
double feasibility_margin(const ConvexParams& theta_hat,
                          const PlantSector& plant, double rho,
                          const Vector& lambda_delta);

/// Nearest point (in the weighted Frobenius norm) to `prob.target` with
/// build_lmi >= eps I. Throws kInfeasible if no such point exists and
/// kSolver if the solver fails.
ProjectionResult project(const ProjectionProblem& prob,
                         const ProjectionOptions& opts = {});

/// Finds a point with margin >= `goal` by maximizing the margin over a box,
/// stopping early once `goal` is reached. Throws kInfeasible otherwise.
ConvexParams find_feasible(const PlantSector& plant, Eigen::Index n_phi,
                           double rho, const Vector& lambda_delta, double goal,
                           const ProjectionOptions& opts = {});

/// Lambda_Delta maximizing t subject to build_lmi(theta_hat, Lambda_Delta)
/// >= t I and eps <= Lambda_Delta <= lambda_max, started from `incumbent`.
Vector recenter_lambda(const ConvexParams& theta_hat, const PlantSector& plant,
                       double rho, const Vector& incumbent,
                       const ProjectionOptions& opts = {});

/// Projects a draw with standard Gaussian entries (Lambda_phi drawn as |.|)
/// onto the feasible set; Lambda_Delta = I. Deterministic in `seed`.
ConvexParams sample_feasible(const PlantSector& plant, double rho,
                             std::uint64_t seed, Eigen::Index n_phi,
                             const ProjectionOptions& opts = {});

/// Writes the projection program as a sparse-triplet text dump: the LMI in
/// the packed variables followed by `target` and `weights` lines.
void write_projection_program(const ProjectionProblem& prob, double eps,
                              std::ostream& os);

}  // namespace stabren
