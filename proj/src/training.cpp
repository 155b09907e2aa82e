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

#include "stabren/training.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>

namespace stabren {

namespace {

FixedPointOptions rollout_solver() {
  FixedPointOptions o;
  o.tol = 1e-12;
  o.max_iterations = 2000;
  o.polish_steps = 3;
  return o;
}

// Rollout plus the plant-side quantities needed for differentiation.
RolloutRecord simulate(const PlantSector& plant,
                       const TransformedRenParams& tt, const Vector& x0,
                       const RewardOracle& oracle, std::vector<Vector>* p_out) {
  require(oracle.horizon >= 0, ErrorKind::kInvalidArgument,
          "rollout: horizon must be nonnegative");
  require(static_cast<bool>(oracle.reward), ErrorKind::kInvalidArgument,
          "rollout: reward oracle has no reward function");
  require(x0.size() == plant.n_state(), ErrorKind::kDimensionMismatch,
          "rollout: initial state size");
  require(tt.n_y() == plant.n_output() && tt.n_u() == plant.n_input(),
          ErrorKind::kDimensionMismatch,
          "rollout: controller and plant I/O sizes differ");
  const FixedPointOptions fp = rollout_solver();
  const int horizon = oracle.horizon;
  RolloutRecord rec;
  rec.rewards.assign(static_cast<std::size_t>(horizon) + 1, 0.0);
  Vector x = x0;
  Vector xi = Vector::Zero(tt.n_xi());
  for (int k = 0; k <= horizon; ++k) {
    rec.x.push_back(x);
    rec.xi.push_back(xi);
    if (oracle.terminated && oracle.terminated(x)) {
      rec.termination_step = k;
      break;
    }
    const Vector y = plant.c_g1 * x;
    ControllerStep cs;
    try {
      cs = controller_step(tt, xi, y, fp);
    } catch (const Error& e) {
      throw Error(e.kind(), "rollout step " + std::to_string(k) +
                                ": controller equilibrium: " + e.what());
    }
    const double r = oracle.reward(x, cs.u, k);
    rec.rewards[static_cast<std::size_t>(k)] = r;
    rec.total_reward += r;
    rec.u.push_back(cs.u);
    rec.y.push_back(y);
    rec.z.push_back(cs.z);
    if (k == horizon) break;
    SectorStep ps;
    try {
      ps = sector_plant_step(plant, x, cs.u, fp);
    } catch (const Error& e) {
      throw Error(e.kind(), "rollout step " + std::to_string(k) +
                                ": plant equilibrium: " + e.what());
    }
    if (p_out) p_out->push_back(ps.p);
    x = ps.x_next;
    xi = cs.xi_next;
  }
  return rec;
}

double inner(const RenMatrices& a, const RenMatrices& b) {
  return a.a_k.cwiseProduct(b.a_k).sum() + a.b_k1.cwiseProduct(b.b_k1).sum() +
         a.b_k2.cwiseProduct(b.b_k2).sum() + a.c_k1.cwiseProduct(b.c_k1).sum() +
         a.d_k1.cwiseProduct(b.d_k1).sum() + a.d_k2.cwiseProduct(b.d_k2).sum() +
         a.c_k2.cwiseProduct(b.c_k2).sum() + a.d_k3.cwiseProduct(b.d_k3).sum() +
         a.d_k4.cwiseProduct(b.d_k4).sum();
}

void accumulate(RenMatrices& acc, const RenMatrices& g, double w) {
  acc.a_k += w * g.a_k;
  acc.b_k1 += w * g.b_k1;
  acc.b_k2 += w * g.b_k2;
  acc.c_k1 += w * g.c_k1;
  acc.d_k1 += w * g.d_k1;
  acc.d_k2 += w * g.d_k2;
  acc.c_k2 += w * g.c_k2;
  acc.d_k3 += w * g.d_k3;
  acc.d_k4 += w * g.d_k4;
}

double mean_reward(const PlantSector& plant, const TransformedRenParams& tt,
                   const std::vector<Vector>& x0s, const RewardOracle& oracle) {
  double s = 0.0;
  for (const auto& x0 : x0s) s += rollout(plant, tt, x0, oracle).total_reward;
  return x0s.empty() ? 0.0 : s / static_cast<double>(x0s.size());
}

std::vector<Vector> sample_box(std::mt19937_64& rng, const Vector& lo,
                               const Vector& hi, int count) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vector> out;
  for (int i = 0; i < count; ++i) {
    Vector x(lo.size());
    for (Eigen::Index j = 0; j < lo.size(); ++j)
      x(j) = lo(j) + (hi(j) - lo(j)) * unit(rng);
    out.push_back(std::move(x));
  }
  return out;
}

ConvexParams axpy(const ConvexParams& x, double a, const ConvexParams& d) {
  ConvexParams out;
  out.x_mat = x.x_mat + a * d.x_mat;
  out.y_mat = x.y_mat + a * d.y_mat;
  out.n_mat = x.n_mat + a * d.n_mat;
  out.lambda_phi = x.lambda_phi + a * d.lambda_phi;
  out.d_k1_tilde = x.d_k1_tilde + a * d.d_k1_tilde;
  out.n_hat_12 = x.n_hat_12 + a * d.n_hat_12;
  out.n_hat_21 = x.n_hat_21 + a * d.n_hat_21;
  out.d_hat_k3 = x.d_hat_k3 + a * d.d_hat_k3;
  out.d_hat_k4 = x.d_hat_k4 + a * d.d_hat_k4;
  return out;
}

}  // namespace

RewardOracle RewardOracle::bias_minus_effort(int horizon, double bias,
                                             double angle_limit) {
  RewardOracle o;
  o.name = "bias_minus_effort";
  o.horizon = horizon;
  o.reward = [bias](const Vector&, const Vector& u, int) {
    return bias - u.squaredNorm();
  };
  o.reward_grad = [](const Vector& x, const Vector& u, int, Vector& dx,
                     Vector& du) {
    dx = Vector::Zero(x.size());
    du = -2.0 * u;
  };
  o.terminated = [angle_limit](const Vector& x) {
    return std::abs(x(0)) >= angle_limit;
  };
  return o;
}

RewardOracle RewardOracle::bias_minus_quadratic(const Matrix& q,
                                                const Matrix& r, int horizon,
                                                double bias,
                                                double angle_limit) {
  require(q.rows() == q.cols() && r.rows() == r.cols(),
          ErrorKind::kDimensionMismatch, "reward: Q and R must be square");
  RewardOracle o;
  o.name = "bias_minus_quadratic";
  o.horizon = horizon;
  o.reward = [q, r, bias](const Vector& x, const Vector& u, int) {
    return bias - x.dot(q * x) - u.dot(r * u);
  };
  o.reward_grad = [q, r](const Vector& x, const Vector& u, int, Vector& dx,
                         Vector& du) {
    dx = -(q + q.transpose()) * x;
    du = -(r + r.transpose()) * u;
  };
  o.terminated = [angle_limit](const Vector& x) {
    return std::abs(x(0)) >= angle_limit;
  };
  return o;
}

RolloutRecord rollout(const PlantSector& plant,
                      const TransformedRenParams& tt, const Vector& x0,
                      const RewardOracle& oracle) {
  return simulate(plant, tt, x0, oracle, nullptr);
}

double rollout_gradient(const PlantSector& plant,
                        const TransformedRenParams& tt, const Vector& x0,
                        const RewardOracle& oracle, RenMatrices& g) {
  require(static_cast<bool>(oracle.reward_grad), ErrorKind::kInvalidArgument,
          "analytic gradient: reward oracle has no derivative");
  std::vector<Vector> ps;
  const RolloutRecord rec = simulate(plant, tt, x0, oracle, &ps);
  g = RenMatrices::zeros(tt.n_xi(), tt.n_phi(), tt.n_y(), tt.n_u());

  const int n = static_cast<int>(rec.u.size());
  Vector ax = Vector::Zero(plant.n_state());  // adjoint of x(k + 1)
  Vector axi = Vector::Zero(tt.n_xi());       // adjoint of xi(k + 1)
  for (int k = n - 1; k >= 0; --k) {
    const auto ku = static_cast<std::size_t>(k);
    const Vector& x = rec.x[ku];
    const Vector& xi = rec.xi[ku];
    const Vector& y = rec.y[ku];
    const Vector& z = rec.z[ku];
    const Vector& u = rec.u[ku];
    Vector rx, ru;
    oracle.reward_grad(x, u, k, rx, ru);

    const Vector a_u = ru + plant.b_g2.transpose() * ax;
    Vector nu_p = Vector::Zero(plant.n_delta());
    if (plant.n_delta() > 0 && ku < ps.size()) {
      const Vector a_q = plant.b_g1.transpose() * ax;
      try {
        nu_p = implicit_sensitivity(plant.delta.slope(ps[ku]), plant.d_g3)
                   .transpose() *
               a_q;
      } catch (const Error& e) {
        throw Error(e.kind(), "gradient step " + std::to_string(k) +
                                  ": plant: " + e.what());
      }
    }
    const Vector a_z = tt.d_k1.transpose() * a_u + tt.b_k1.transpose() * axi;
    const Vector v = tt.c_k2 * xi + tt.d_k3 * z + tt.d_k4 * y;
    Vector mu;
    try {
      mu = implicit_sensitivity(tt.phi_tilde.slope(v), tt.d_k3).transpose() *
           a_z;
    } catch (const Error& e) {
      throw Error(e.kind(), "gradient step " + std::to_string(k) +
                                ": controller: " + e.what());
    }
    const Vector a_y = tt.d_k2.transpose() * a_u + tt.b_k2.transpose() * axi +
                       tt.d_k4.transpose() * mu;

    g.a_k += axi * xi.transpose();
    g.b_k1 += axi * z.transpose();
    g.b_k2 += axi * y.transpose();
    g.c_k1 += a_u * xi.transpose();
    g.d_k1 += a_u * z.transpose();
    g.d_k2 += a_u * y.transpose();
    g.c_k2 += mu * xi.transpose();
    g.d_k3 += mu * z.transpose();
    g.d_k4 += mu * y.transpose();

    const Vector axi_prev = tt.a_k.transpose() * axi +
                            tt.c_k1.transpose() * a_u +
                            tt.c_k2.transpose() * mu;
    const Vector ax_prev = rx + plant.a_g.transpose() * ax +
                           plant.c_g2.transpose() * nu_p +
                           plant.c_g1.transpose() * a_y;
    ax = ax_prev;
    axi = axi_prev;
  }
  return rec.total_reward;
}

double PolicyGradient::norm() const {
  return std::sqrt(grad.x_mat.squaredNorm() + grad.y_mat.squaredNorm() +
                   grad.n_mat.squaredNorm() + grad.lambda_phi.squaredNorm() +
                   grad.d_k1_tilde.squaredNorm() + grad.n_hat_12.squaredNorm() +
                   grad.n_hat_21.squaredNorm() + grad.d_hat_k3.squaredNorm() +
                   grad.d_hat_k4.squaredNorm());
}

PolicyGradient policy_gradient(const PlantSector& model,
                               const PlantSector& rollout_plant,
                               const ConvexParams& th, const Nonlinearity& phi,
                               const RewardOracle& oracle,
                               const std::vector<Vector>& x0s, GradMode mode,
                               double fd_step) {
  require(!x0s.empty(), ErrorKind::kInvalidArgument,
          "policy gradient: empty batch");
  const ConvexLayout layout =
      ConvexLayout::for_plant(model, th.lambda_phi.size());
  const int n = static_cast<int>(layout.size());
  RecoveryOptions ro;
  ro.force_u_equals_x = true;
  const TransformedRenParams tt =
      recover_controller(th, model, phi, ro).theta_tilde;
  const double inv_n = 1.0 / static_cast<double>(x0s.size());

  PolicyGradient out;
  Vector gp(n);
  if (mode == GradMode::kAnalytic) {
    RenMatrices acc = RenMatrices::zeros(tt.n_xi(), tt.n_phi(), tt.n_y(),
                                         tt.n_u());
    for (const auto& x0 : x0s) {
      RenMatrices g;
      out.mean_reward += inv_n * rollout_gradient(rollout_plant, tt, x0,
                                                  oracle, g);
      accumulate(acc, g, inv_n);
    }
    Vector e = Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
      e(i) = 1.0;
      gp(i) = inner(acc, recovery_differential(th, model, tt,
                                               layout.unpack(e)));
      e(i) = 0.0;
    }
  } else {
    require(fd_step > 0.0, ErrorKind::kInvalidArgument,
            "policy gradient: finite-difference step must be positive");
    out.mean_reward = mean_reward(rollout_plant, tt, x0s, oracle);
    const Vector base = layout.pack(th);
    for (int i = 0; i < n; ++i) {
      Vector vp = base, vm = base;
      vp(i) += fd_step;
      vm(i) -= fd_step;
      const double rp = mean_reward(
          rollout_plant,
          recover_controller(layout.unpack(vp), model, phi, ro).theta_tilde,
          x0s, oracle);
      const double rm = mean_reward(
          rollout_plant,
          recover_controller(layout.unpack(vm), model, phi, ro).theta_tilde,
          x0s, oracle);
      gp(i) = (rp - rm) / (2.0 * fd_step);
    }
  }
  out.grad = layout.unpack(gp.cwiseQuotient(layout.frobenius_weights()));
  return out;
}

void TrainConfig::validate() const {
  plant.validate();
  if (rollout_plant) {
    rollout_plant->validate();
    require(rollout_plant->n_state() == plant.n_state() &&
                rollout_plant->n_input() == plant.n_input() &&
                rollout_plant->n_output() == plant.n_output(),
            ErrorKind::kDimensionMismatch,
            "train: rollout plant and model sizes differ");
  }
  require(rho >= 0.0 && rho < 1.0, ErrorKind::kInvalidArgument,
          "train: rho must lie in [0, 1)");
  require(horizon >= 1, ErrorKind::kInvalidArgument,
          "train: horizon must be at least 1");
  require(n_phi >= 1, ErrorKind::kInvalidArgument, "train: n_phi >= 1");
  require(x0_low.size() == plant.n_state() && x0_high.size() == plant.n_state(),
          ErrorKind::kDimensionMismatch, "train: initial-state box size");
  require((x0_low.array() <= x0_high.array()).all(),
          ErrorKind::kInvalidArgument, "train: empty initial-state box");
  require(learning_rate > 0.0, ErrorKind::kInvalidArgument,
          "train: learning rate must be positive");
  require(batch_size >= 1 && eval_batch_size >= 1 && iterations >= 0,
          ErrorKind::kInvalidArgument, "train: batch sizes and iterations");
  require(eps > 0.0, ErrorKind::kInvalidArgument, "train: eps > 0");
}

double envelope_excess(const PlantSector& plant,
                       const TransformedRenParams& tt,
                       const StabilityCertificate& cert, const Vector& x0,
                       int steps) {
  const ClosedLoop cl = assemble_closed_loop(plant, tt);
  const FixedPointOptions fp = rollout_solver();
  Vector zeta = Vector::Zero(cl.n_state());
  zeta.head(cl.n_g) = x0;
  const double n0 = zeta.norm();
  const double scale = std::sqrt(cert.condition_number());
  double worst = -std::numeric_limits<double>::infinity();
  double bound = scale * n0;
  for (int k = 0; k <= steps; ++k) {
    worst = std::max(worst, zeta.norm() - bound);
    if (k == steps) break;
    zeta = cl.step(zeta, fp);
    bound *= cert.rho;
  }
  return worst;
}

TrainResult train(const TrainConfig& cfg, const RewardOracle& base_oracle,
                  const TrainCallback& on_iteration) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t_start)
        .count();
  };
  const PlantSector& model = cfg.plant;
  const PlantSector& sim = cfg.rollout_plant ? *cfg.rollout_plant : cfg.plant;
  RewardOracle oracle = base_oracle;
  oracle.horizon = cfg.horizon;
  const Nonlinearity phi = Nonlinearity::uniform(cfg.activation, cfg.n_phi);
  ProjectionOptions popts;
  popts.eps = cfg.eps;

  std::mt19937_64 rng(cfg.seed);
  std::mt19937_64 eval_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  const std::vector<Vector> eval_set =
      sample_box(eval_rng, cfg.x0_low, cfg.x0_high, cfg.eval_batch_size);

  TrainResult res;
  res.lambda_delta = Vector::Ones(model.n_delta());
  res.theta_hat = sample_feasible(model, cfg.rho, cfg.seed, cfg.n_phi, popts);
  res.trace.push_back("sample");

  auto certify = [&](const ConvexParams& th) {
    Recovery rec =
        recover_parameters(th, model, cfg.rho, res.lambda_delta, phi);
    res.trace.push_back("certify");
    const Vector x0 = sample_box(rng, cfg.x0_low, cfg.x0_high, 1).front();
    const double excess = envelope_excess(model, rec.theta_tilde,
                                          rec.certificate, x0,
                                          cfg.validation_steps);
    require(excess <= 1e-8, ErrorKind::kEnvelopeViolation,
            "train: validation rollout leaves the decay envelope by " +
                std::to_string(excess));
    return rec;
  };

  double lr = cfg.learning_rate;
  double prev_eval = -std::numeric_limits<double>::infinity();
  double best_eval = -std::numeric_limits<double>::infinity();
  PolicyGradient pg;
  for (int it = 0; it <= cfg.iterations; ++it) {
    IterationRecord row;
    row.iteration = it;
    if (it > 0) {
      ConvexParams step = pg.grad;
      const double gn = pg.norm();
      double scale = lr;
      if (cfg.grad_clip > 0.0 && gn > cfg.grad_clip)
        scale *= cfg.grad_clip / gn;
      const ConvexParams target = axpy(res.theta_hat, scale, step);
      res.trace.push_back("step");
      ProjectionProblem prob;
      prob.target = target;
      prob.plant = model;
      prob.rho = cfg.rho;
      prob.lambda_delta = res.lambda_delta;
      prob.warm_start = res.theta_hat;
      const ProjectionResult pr = project(prob, popts);
      res.trace.push_back("project");
      res.theta_hat = pr.theta_hat;
      row.projection_distance = pr.distance;
      if (model.n_delta() > 0) {
        res.lambda_delta = recenter_lambda(res.theta_hat, model, cfg.rho,
                                           res.lambda_delta, popts);
        res.trace.push_back("recenter");
      }
    }
    const Recovery rec = certify(res.theta_hat);
    res.theta_tilde = rec.theta_tilde;
    res.certificate = rec.certificate;
    row.lmi_margin = feasibility_margin(res.theta_hat, model, cfg.rho,
                                        res.lambda_delta);
    row.certificate_margin = rec.certificate.margin;

    const std::vector<Vector> batch =
        sample_box(rng, cfg.x0_low, cfg.x0_high, cfg.batch_size);
    pg = policy_gradient(model, sim, res.theta_hat, phi, oracle, batch,
                         cfg.grad_mode);
    row.mean_reward = pg.mean_reward;
    row.grad_norm = pg.norm();
    row.eval_reward = mean_reward(sim, res.theta_tilde, eval_set, oracle);
    if (cfg.halve_on_decrease && row.eval_reward < prev_eval) lr *= 0.5;
    prev_eval = row.eval_reward;
    row.learning_rate = lr;
    row.wall_time = elapsed();
    if (row.eval_reward > best_eval) {
      best_eval = row.eval_reward;
      res.best_iteration = it;
      res.best_theta_hat = res.theta_hat;
      res.best_theta_tilde = res.theta_tilde;
      res.best_certificate = res.certificate;
    }
    res.history.push_back(row);
    if (on_iteration) on_iteration(row);
  }
  return res;
}

}  // namespace stabren
