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

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

namespace stabren {

namespace {

Vector box_rows(int n, double bound, Matrix& a) {
  a = Matrix::Zero(2 * n, n + 1);
  Vector b = Vector::Constant(2 * n, bound);
  for (int i = 0; i < n; ++i) {
    a(2 * i, i) = 1.0;
    a(2 * i + 1, i) = -1.0;
  }
  return b;
}

}  // namespace

double feasibility_margin(const ConvexParams& theta_hat,
                          const PlantSector& plant, double rho,
                          const Vector& lambda_delta) {
  return min_eigenvalue(build_lmi(theta_hat, plant, rho, lambda_delta));
}

ConvexParams find_feasible(const PlantSector& plant, Eigen::Index n_phi,
                           double rho, const Vector& lambda_delta, double goal,
                           const ProjectionOptions& opts) {
  const ConvexLayout layout = ConvexLayout::for_plant(plant, n_phi);
  const int n = static_cast<int>(layout.size());
  sdp::AffineSymMatrix lmi =
      lmi_affine_in_theta(plant, n_phi, rho, lambda_delta);
  lmi.append_identity_variable(-1.0);

  sdp::BarrierProblem prob;
  prob.num_vars = n + 1;
  prob.lmis.push_back(std::move(lmi));
  prob.lin_b = box_rows(n, opts.phase1_box, prob.lin_a);
  prob.linear_cost = Vector::Zero(n + 1);
  prob.linear_cost(n) = -1.0;

  Vector start = Vector::Zero(n + 1);
  start(n) = min_eigenvalue(prob.lmis[0].evaluate(start)) - 1.0;
  sdp::BarrierOptions bo = opts.barrier;
  bo.stop_index = n;
  bo.stop_value = goal;
  bo.gap_tol = std::max(bo.gap_tol, 1e-8);
  sdp::BarrierResult res;
  try {
    res = sdp::solve_barrier(prob, start, bo);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kSolver) throw;
    throw Error(ErrorKind::kSolver,
                std::string("feasibility search failed: ") + e.what());
  }
  require(res.x(n) >= goal, ErrorKind::kInfeasible,
          "no parameters reach the required LMI margin (best margin " +
              std::to_string(res.x(n)) + ")");
  return layout.unpack(res.x.head(n));
}

ProjectionResult project(const ProjectionProblem& prob,
                         const ProjectionOptions& opts) {
  require(opts.eps > 0.0, ErrorKind::kInvalidArgument,
          "project: eps must be positive");
  const Eigen::Index n_phi = prob.target.lambda_phi.size();
  const ConvexLayout layout = ConvexLayout::for_plant(prob.plant, n_phi);
  layout.check(prob.target);
  require(prob.lambda_delta.size() == prob.plant.n_delta(),
          ErrorKind::kDimensionMismatch, "project: lambda_delta size");

  ProjectionResult out;
  const double target_margin =
      feasibility_margin(prob.target, prob.plant, prob.rho, prob.lambda_delta);
  if (target_margin >= opts.eps) {
    out.theta_hat = prob.target;
    out.margin = target_margin;
    out.unchanged = true;
    return out;
  }

  const int n = static_cast<int>(layout.size());
  Vector weights = layout.frobenius_weights();
  if (prob.weights.size() > 0) {
    require(prob.weights.size() == n, ErrorKind::kDimensionMismatch,
            "project: weights size");
    require((prob.weights.array() > 0.0).all(), ErrorKind::kInvalidArgument,
            "project: weights must be positive");
    weights = weights.cwiseProduct(prob.weights);
  }

  ConvexParams start;
  if (prob.warm_start &&
      feasibility_margin(*prob.warm_start, prob.plant, prob.rho,
                         prob.lambda_delta) > opts.eps) {
    start = *prob.warm_start;
  } else {
    start = find_feasible(prob.plant, n_phi, prob.rho, prob.lambda_delta,
                          10.0 * opts.eps, opts);
  }

  sdp::BarrierProblem bp;
  bp.num_vars = n;
  bp.quad_weights = weights;
  bp.quad_center = layout.pack(prob.target);
  sdp::AffineSymMatrix lmi =
      lmi_affine_in_theta(prob.plant, n_phi, prob.rho, prob.lambda_delta);
  lmi.shift_diagonal(-opts.eps);
  bp.lmis.push_back(std::move(lmi));

  const sdp::BarrierResult res =
      sdp::solve_barrier(bp, layout.pack(start), opts.barrier);
  out.theta_hat = layout.unpack(res.x);
  out.distance = convex_distance(out.theta_hat, prob.target);
  out.margin = feasibility_margin(out.theta_hat, prob.plant, prob.rho,
                                  prob.lambda_delta);
  out.newton_steps = res.newton_steps;
  return out;
}

Vector recenter_lambda(const ConvexParams& theta_hat, const PlantSector& plant,
                       double rho, const Vector& incumbent,
                       const ProjectionOptions& opts) {
  const int nd = static_cast<int>(plant.n_delta());
  if (nd == 0) return Vector();
  require(incumbent.size() == nd, ErrorKind::kDimensionMismatch,
          "recenter_lambda: incumbent size");
  const double lo = opts.eps, hi = opts.lambda_max;
  require(hi > lo, ErrorKind::kInvalidArgument,
          "recenter_lambda: empty multiplier range");

  sdp::AffineSymMatrix lmi = lmi_affine_in_lambda_delta(theta_hat, plant, rho);
  lmi.append_identity_variable(-1.0);
  sdp::BarrierProblem prob;
  prob.num_vars = nd + 1;
  prob.lmis.push_back(std::move(lmi));
  prob.lin_a = Matrix::Zero(2 * nd, nd + 1);
  prob.lin_b = Vector::Zero(2 * nd);
  for (int i = 0; i < nd; ++i) {
    prob.lin_a(2 * i, i) = 1.0;
    prob.lin_b(2 * i) = -lo;
    prob.lin_a(2 * i + 1, i) = -1.0;
    prob.lin_b(2 * i + 1) = hi;
  }
  prob.linear_cost = Vector::Zero(nd + 1);
  prob.linear_cost(nd) = -1.0;

  Vector start(nd + 1);
  const double pad = 1e-3 * (hi - lo);
  for (int i = 0; i < nd; ++i)
    start(i) = std::clamp(incumbent(i), lo + std::min(pad, 0.5 * lo),
                          hi - pad);
  start(nd) = 0.0;
  start(nd) = min_eigenvalue(prob.lmis[0].evaluate(start)) - 1.0;
  const double incumbent_margin =
      feasibility_margin(theta_hat, plant, rho, incumbent);

  const sdp::BarrierResult res = sdp::solve_barrier(prob, start, opts.barrier);
  Vector best = res.x.head(nd);
  const double m = feasibility_margin(theta_hat, plant, rho, best);
  // Keep the incumbent if the solver's interior point falls short of it.
  if (m < incumbent_margin && (incumbent.array() >= lo).all()) {
    best = incumbent;
  }
  require(std::max(m, incumbent_margin) > 0.0, ErrorKind::kInfeasible,
          "recenter_lambda: no multiplier makes the LMI feasible");
  return best;
}

ConvexParams sample_feasible(const PlantSector& plant, double rho,
                             std::uint64_t seed, Eigen::Index n_phi,
                             const ProjectionOptions& opts) {
  const ConvexLayout layout = ConvexLayout::for_plant(plant, n_phi);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(layout.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal(rng);
  ConvexParams draw = layout.unpack(v);
  draw.lambda_phi = draw.lambda_phi.cwiseAbs();
  ProjectionProblem prob;
  prob.target = draw;
  prob.plant = plant;
  prob.rho = rho;
  prob.lambda_delta = Vector::Ones(plant.n_delta());
  return project(prob, opts).theta_hat;
}

void write_projection_program(const ProjectionProblem& prob, double eps,
                              std::ostream& os) {
  const Eigen::Index n_phi = prob.target.lambda_phi.size();
  const ConvexLayout layout = ConvexLayout::for_plant(prob.plant, n_phi);
  sdp::AffineSymMatrix lmi =
      lmi_affine_in_theta(prob.plant, n_phi, prob.rho, prob.lambda_delta);
  lmi.shift_diagonal(-eps);
  lmi.write_triplets(os);
  Vector w = layout.frobenius_weights();
  if (prob.weights.size() > 0) w = w.cwiseProduct(prob.weights);
  const Vector t = layout.pack(prob.target);
  const auto old = os.precision(17);
  os << "target";
  for (Eigen::Index i = 0; i < t.size(); ++i) os << " " << t(i);
  os << "\nweights";
  for (Eigen::Index i = 0; i < w.size(); ++i) os << " " << w(i);
  os << "\n";
  os.precision(old);
}

}  // namespace stabren
