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

#include "stabren/stabren.h"

#include "stabren/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <utility>

using namespace stabren;

struct sr_plant {
  PlantSector p;
};
struct sr_controller {
  TransformedRenParams c;
};
struct sr_theta {
  ConvexParams th;
  Vector lambda_delta;
  double rho = 0.0;
};
struct sr_certificate {
  StabilityCertificate c;
};
struct sr_train_config {
  Experiment e;
};
struct sr_sysid_result {
  SysidRun run;
};
struct sr_train_result {
  TrainResult r;
  PlantSector model;
  std::optional<SysidRun> sysid;
};

namespace {

thread_local std::string g_last_error;

sr_status status_of(ErrorKind k) {
  switch (k) {
    case ErrorKind::kInvalidArgument: return SR_ERR_INVALID_ARGUMENT;
    case ErrorKind::kDimensionMismatch: return SR_ERR_DIMENSION;
    case ErrorKind::kParse: return SR_ERR_PARSE;
    case ErrorKind::kIo: return SR_ERR_IO;
    case ErrorKind::kInfeasible: return SR_ERR_INFEASIBLE;
    case ErrorKind::kSolver: return SR_ERR_SOLVER;
    case ErrorKind::kNonConvergence: return SR_ERR_NONCONVERGENCE;
    case ErrorKind::kSingular: return SR_ERR_SINGULAR;
    case ErrorKind::kEnvelopeViolation: return SR_ERR_ENVELOPE;
    case ErrorKind::kNumeric: return SR_ERR_NUMERIC;
  }
  return SR_ERR_INTERNAL;
}

sr_status fail(sr_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <typename F>
sr_status guard(F&& f) {
  try {
    f();
    return SR_OK;
  } catch (const Error& e) {
    return fail(status_of(e.kind()), e.what());
  } catch (const io::Json::exception& e) {
    return fail(SR_ERR_PARSE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SR_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SR_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SR_ERR_INTERNAL, "unknown exception");
  }
}

void need(const void* p, const char* name) {
  if (p == nullptr) {
    throw Error(ErrorKind::kInvalidArgument, std::string(name) + " is NULL");
  }
}

Matrix row_major(const double* data, int rows, int cols) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = data[i * cols + j];
  return m;
}

Vector lambda_delta_for(const sr_theta& t, const PlantSector& plant) {
  if (t.lambda_delta.size() == 0) return Vector::Ones(plant.n_delta());
  return t.lambda_delta;
}

template <typename T>
T* make(T&& v) {
  return new T(std::forward<T>(v));
}

std::ofstream open_out(const char* path) {
  need(path, "path");
  std::ofstream os(path);
  require(static_cast<bool>(os), ErrorKind::kIo,
          std::string("cannot open '") + path + "' for writing");
  os.precision(17);
  return os;
}

void close_out(std::ofstream& os, const char* path) {
  os.close();
  require(!os.fail(), ErrorKind::kIo,
          std::string("write to '") + path + "' failed");
}

void write_sysid_loss(const SysidResult& r, const char* path) {
  auto os = open_out(path);
  os << "epoch,loss,d3_norm\n";
  for (std::size_t i = 0; i < r.loss.size(); ++i) {
    os << i << "," << r.loss[i] << ","
       << (i < r.d3_norm.size() ? r.d3_norm[i] : 0.0) << "\n";
  }
  close_out(os, path);
}

sr_iteration to_c(const IterationRecord& r) {
  return {r.iteration,        r.mean_reward,         r.eval_reward,
          r.lmi_margin,       r.certificate_margin,  r.grad_norm,
          r.projection_distance, r.learning_rate,    r.wall_time};
}

}  // namespace

extern "C" {

const char* sr_version(void) { return "1.0.0"; }

const char* sr_last_error(void) { return g_last_error.c_str(); }

const char* sr_status_name(sr_status s) {
  switch (s) {
    case SR_OK: return "ok";
    case SR_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SR_ERR_DIMENSION: return "dimension mismatch";
    case SR_ERR_PARSE: return "parse error";
    case SR_ERR_IO: return "i/o error";
    case SR_ERR_INFEASIBLE: return "infeasible";
    case SR_ERR_SOLVER: return "solver failure";
    case SR_ERR_NONCONVERGENCE: return "no convergence";
    case SR_ERR_SINGULAR: return "singular";
    case SR_ERR_ENVELOPE: return "envelope violation";
    case SR_ERR_NUMERIC: return "numerical failure";
    case SR_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

sr_status sr_plant_load(const char* path, sr_plant** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    auto p = io::plant_from_json(io::read_json(path),
                                 std::filesystem::path(path).parent_path());
    p.validate();
    *out = new sr_plant{std::move(p)};
  });
}

sr_status sr_plant_save(const sr_plant* plant, const char* path) {
  return guard([&] {
    need(plant, "plant");
    need(path, "path");
    io::write_json(path, io::plant_to_json(plant->p));
  });
}

sr_status sr_plant_pendulum(sr_plant** out) {
  return guard([&] {
    need(out, "out");
    *out = new sr_plant{pendulum_plant()};
  });
}

sr_status sr_plant_lti(int n_state, int n_input, int n_output, const double* a,
                       const double* b, const double* c, sr_plant** out) {
  return guard([&] {
    need(a, "a");
    need(b, "b");
    need(c, "c");
    need(out, "out");
    require(n_state > 0 && n_input > 0 && n_output > 0,
            ErrorKind::kInvalidArgument, "plant sizes must be positive");
    PlantLti lti{row_major(a, n_state, n_state),
                 row_major(b, n_state, n_input),
                 row_major(c, n_output, n_state)};
    lti.validate();
    *out = new sr_plant{to_sector_plant(lti)};
  });
}

sr_status sr_plant_dims(const sr_plant* plant, int* n_state, int* n_input,
                        int* n_output, int* n_delta) {
  return guard([&] {
    need(plant, "plant");
    if (n_state) *n_state = static_cast<int>(plant->p.n_state());
    if (n_input) *n_input = static_cast<int>(plant->p.n_input());
    if (n_output) *n_output = static_cast<int>(plant->p.n_output());
    if (n_delta) *n_delta = static_cast<int>(plant->p.n_delta());
  });
}

sr_status sr_plant_step(const sr_plant* plant, const double* x,
                        const double* u, double* x_next, double* y) {
  return guard([&] {
    need(plant, "plant");
    need(x, "x");
    need(u, "u");
    const auto& p = plant->p;
    const Vector xv = Eigen::Map<const Vector>(x, p.n_state());
    const Vector uv = Eigen::Map<const Vector>(u, p.n_input());
    const SectorStep s = sector_plant_step(p, xv, uv);
    if (x_next) Eigen::Map<Vector>(x_next, p.n_state()) = s.x_next;
    if (y) Eigen::Map<Vector>(y, p.n_output()) = s.y;
  });
}

void sr_plant_free(sr_plant* plant) { delete plant; }

sr_status sr_controller_load(const char* path, sr_controller** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    auto c = io::controller_from_json(
        io::read_json(path), std::filesystem::path(path).parent_path());
    *out = new sr_controller{std::move(c)};
  });
}

sr_status sr_controller_save(const sr_controller* c, const char* path) {
  return guard([&] {
    need(c, "controller");
    need(path, "path");
    io::write_json(path, io::controller_to_json(c->c));
  });
}

sr_status sr_controller_zero(int n_xi, int n_phi, int n_y, int n_u,
                             const char* activation, sr_controller** out) {
  return guard([&] {
    need(out, "out");
    require(n_xi >= 0 && n_phi >= 0 && n_y > 0 && n_u > 0,
            ErrorKind::kInvalidArgument, "controller sizes");
    const Activation act =
        Activation::from_name(activation ? activation : "tanh");
    *out = new sr_controller{TransformedRenParams::from_matrices(
        RenMatrices::zeros(n_xi, n_phi, n_y, n_u),
        Nonlinearity::uniform(act, n_phi))};
  });
}

sr_status sr_controller_dims(const sr_controller* c, int* n_xi, int* n_phi,
                             int* n_y, int* n_u) {
  return guard([&] {
    need(c, "controller");
    if (n_xi) *n_xi = static_cast<int>(c->c.n_xi());
    if (n_phi) *n_phi = static_cast<int>(c->c.n_phi());
    if (n_y) *n_y = static_cast<int>(c->c.n_y());
    if (n_u) *n_u = static_cast<int>(c->c.n_u());
  });
}

void sr_controller_free(sr_controller* c) { delete c; }

sr_status sr_theta_load(const char* path, sr_theta** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    const auto doc = io::read_json(path);
    sr_theta t;
    t.th = io::theta_hat_from_json(doc, &t.lambda_delta,
                                   std::filesystem::path(path).parent_path());
    if (doc.is_object() && doc.contains("rho")) {
      t.rho = doc.at("rho").get<double>();
    }
    *out = make(std::move(t));
  });
}

sr_status sr_theta_save(const sr_theta* t, const char* path) {
  return guard([&] {
    need(t, "theta");
    need(path, "path");
    io::write_json(path, io::theta_hat_to_json(t->th, t->lambda_delta, t->rho));
  });
}

sr_status sr_theta_n_phi(const sr_theta* t, int* n_phi) {
  return guard([&] {
    need(t, "theta");
    need(n_phi, "n_phi");
    *n_phi = static_cast<int>(t->th.lambda_phi.size());
  });
}

void sr_theta_free(sr_theta* t) { delete t; }

sr_status sr_sample_feasible(const sr_plant* plant, double rho, uint64_t seed,
                             int n_phi, double eps, sr_theta** out) {
  return guard([&] {
    need(plant, "plant");
    need(out, "out");
    require(n_phi > 0, ErrorKind::kInvalidArgument, "n_phi must be positive");
    ProjectionOptions opts;
    opts.eps = eps;
    sr_theta t;
    t.th = sample_feasible(plant->p, rho, seed, n_phi, opts);
    t.lambda_delta = Vector::Ones(plant->p.n_delta());
    t.rho = rho;
    *out = make(std::move(t));
  });
}

sr_status sr_project(const sr_theta* target, const sr_plant* plant,
                     double rho, double eps, sr_theta** out,
                     double* distance) {
  return guard([&] {
    need(target, "target");
    need(plant, "plant");
    need(out, "out");
    ProjectionProblem prob;
    prob.target = target->th;
    prob.plant = plant->p;
    prob.rho = rho;
    prob.lambda_delta = lambda_delta_for(*target, plant->p);
    ProjectionOptions opts;
    opts.eps = eps;
    const ProjectionResult r = project(prob, opts);
    if (distance) *distance = r.distance;
    *out = new sr_theta{r.theta_hat, prob.lambda_delta, rho};
  });
}

sr_status sr_feasibility_margin(const sr_theta* t, const sr_plant* plant,
                                double rho, double* margin) {
  return guard([&] {
    need(t, "theta");
    need(plant, "plant");
    need(margin, "margin");
    *margin = feasibility_margin(t->th, plant->p, rho,
                                 lambda_delta_for(*t, plant->p));
  });
}

sr_status sr_recover(const sr_theta* t, const sr_plant* plant, double rho,
                     const char* activation, sr_controller** controller,
                     sr_certificate** certificate) {
  return guard([&] {
    need(t, "theta");
    need(plant, "plant");
    const Activation act =
        Activation::from_name(activation ? activation : "tanh");
    const auto phi = Nonlinearity::uniform(act, t->th.lambda_phi.size());
    Recovery r = recover_parameters(t->th, plant->p, rho,
                                    lambda_delta_for(*t, plant->p), phi);
    if (controller) *controller = new sr_controller{std::move(r.theta_tilde)};
    if (certificate) *certificate = new sr_certificate{std::move(r.certificate)};
  });
}

sr_status sr_write_projection_program(const sr_theta* target,
                                      const sr_plant* plant, double rho,
                                      double eps, const char* path) {
  return guard([&] {
    need(target, "target");
    need(plant, "plant");
    ProjectionProblem prob;
    prob.target = target->th;
    prob.plant = plant->p;
    prob.rho = rho;
    prob.lambda_delta = lambda_delta_for(*target, plant->p);
    auto os = open_out(path);
    write_projection_program(prob, eps, os);
    close_out(os, path);
  });
}

sr_status sr_certify(const sr_plant* plant, const sr_controller* c, double rho,
                     sr_certificate** out) {
  return guard([&] {
    need(plant, "plant");
    need(c, "controller");
    need(out, "out");
    *out = new sr_certificate{find_certificate(plant->p, c->c, rho)};
  });
}

sr_status sr_certificate_save(const sr_certificate* cert, const sr_plant* plant,
                              const sr_controller* c, const char* path) {
  return guard([&] {
    need(cert, "certificate");
    need(plant, "plant");
    need(c, "controller");
    need(path, "path");
    io::write_json(path, io::certificate_to_json(cert->c,
                                                 io::plant_to_json(plant->p),
                                                 io::controller_to_json(c->c)));
  });
}

sr_status sr_certificate_load(const char* path, sr_certificate** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new sr_certificate{io::certificate_from_json(io::read_json(path))};
  });
}

sr_status sr_certificate_matches(const char* path, const sr_plant* plant,
                                 const sr_controller* c, int* match) {
  return guard([&] {
    need(path, "path");
    need(plant, "plant");
    need(c, "controller");
    need(match, "match");
    *match = io::certificate_matches(io::read_json(path),
                                     io::plant_to_json(plant->p),
                                     io::controller_to_json(c->c))
                 ? 1
                 : 0;
  });
}

sr_status sr_certificate_info(const sr_certificate* cert, double* rho,
                              double* margin, double* condition) {
  return guard([&] {
    need(cert, "certificate");
    if (rho) *rho = cert->c.rho;
    if (margin) *margin = cert->c.margin;
    if (condition) *condition = cert->c.condition_number();
  });
}

sr_status sr_decay_envelope(const sr_certificate* cert, double x0_norm, int k,
                            double* bound) {
  return guard([&] {
    need(cert, "certificate");
    need(bound, "bound");
    *bound = decay_envelope(cert->c, x0_norm, k);
  });
}

void sr_certificate_free(sr_certificate* cert) { delete cert; }

sr_status sr_simulate(const sr_plant* plant, const sr_controller* c,
                      const double* x0, int horizon, double angle_limit,
                      double* x_out, double* xi_out, double* u_out,
                      int* steps) {
  return guard([&] {
    need(plant, "plant");
    need(c, "controller");
    need(x0, "x0");
    require(horizon >= 0, ErrorKind::kInvalidArgument,
            "horizon must be non-negative");
    const auto& p = plant->p;
    const auto& k = c->c;
    require(k.n_y() == p.n_output() && k.n_u() == p.n_input(),
            ErrorKind::kDimensionMismatch,
            "controller and plant input/output sizes differ");
    const auto n = p.n_state(), nxi = k.n_xi(), m = k.n_u();
    Vector x = Eigen::Map<const Vector>(x0, n);
    Vector xi = Vector::Zero(nxi);
    FixedPointOptions fp;
    fp.tol = 1e-12;
    fp.polish_steps = 3;
    int t = 0;
    for (;; ++t) {
      if (x_out) Eigen::Map<Vector>(x_out + t * n, n) = x;
      if (xi_out) Eigen::Map<Vector>(xi_out + t * nxi, nxi) = xi;
      if (t == horizon) break;
      if (angle_limit > 0.0 && std::abs(x(0)) >= angle_limit) break;
      const ControllerStep cs = controller_step(k, xi, p.c_g1 * x, fp);
      if (u_out) Eigen::Map<Vector>(u_out + t * m, m) = cs.u;
      x = sector_plant_step(p, x, cs.u, fp).x_next;
      xi = cs.xi_next;
    }
    if (steps) *steps = t;
  });
}

sr_status sr_train_config_load(const char* path, sr_train_config** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new sr_train_config{load_experiment(path)};
  });
}

sr_status sr_train_config_set_rho(sr_train_config* cfg, double rho) {
  return guard([&] {
    need(cfg, "config");
    require(rho >= 0.0 && rho < 1.0, ErrorKind::kInvalidArgument,
            "rho must lie in [0, 1)");
    cfg->e.train.rho = rho;
  });
}

sr_status sr_train_config_set_eps(sr_train_config* cfg, double eps) {
  return guard([&] {
    need(cfg, "config");
    require(eps > 0.0, ErrorKind::kInvalidArgument, "eps must be positive");
    cfg->e.train.eps = eps;
  });
}

sr_status sr_train_config_set_seed(sr_train_config* cfg, uint64_t seed) {
  return guard([&] {
    need(cfg, "config");
    cfg->e.train.seed = seed;
    if (cfg->e.sysid) {
      cfg->e.sysid->seed = seed;
      cfg->e.sysid->options.seed = seed;
    }
  });
}

sr_status sr_train_config_set_horizon(sr_train_config* cfg, int horizon) {
  return guard([&] {
    need(cfg, "config");
    require(horizon >= 1, ErrorKind::kInvalidArgument,
            "horizon must be at least 1");
    cfg->e.train.horizon = horizon;
  });
}

sr_status sr_train_config_set_iterations(sr_train_config* cfg,
                                         int iterations) {
  return guard([&] {
    need(cfg, "config");
    require(iterations >= 0, ErrorKind::kInvalidArgument,
            "iterations must be non-negative");
    cfg->e.train.iterations = iterations;
  });
}

sr_status sr_train_config_set_grad_mode(sr_train_config* cfg,
                                        sr_grad_mode mode) {
  return guard([&] {
    need(cfg, "config");
    require(mode == SR_GRAD_ANALYTIC || mode == SR_GRAD_FINITE_DIFFERENCE,
            ErrorKind::kInvalidArgument, "unknown gradient mode");
    cfg->e.train.grad_mode = mode == SR_GRAD_ANALYTIC
                                 ? GradMode::kAnalytic
                                 : GradMode::kFiniteDifference;
  });
}

void sr_train_config_free(sr_train_config* cfg) { delete cfg; }

sr_status sr_train(const sr_train_config* cfg, sr_iteration_callback callback,
                   void* user, sr_train_result** out) {
  return guard([&] {
    need(cfg, "config");
    need(out, "out");
    Experiment e = cfg->e;
    auto res = std::make_unique<sr_train_result>();
    const RewardOracle oracle = prepare_experiment(e, &res->sysid);
    e.train.validate();
    TrainCallback cb;
    if (callback) {
      cb = [&](const IterationRecord& r) {
        const sr_iteration it = to_c(r);
        callback(&it, user);
      };
    }
    res->r = train(e.train, oracle, cb);
    res->model = e.train.plant;
    *out = res.release();
  });
}

sr_status sr_train_result_history(const sr_train_result* r, int index,
                                  sr_iteration* out, int* count) {
  return guard([&] {
    need(r, "result");
    const int n = static_cast<int>(r->r.history.size());
    if (count) *count = n;
    if (out) {
      require(index >= 0 && index < n, ErrorKind::kInvalidArgument,
              "history index out of range");
      *out = to_c(r->r.history[static_cast<std::size_t>(index)]);
    }
  });
}

sr_status sr_train_result_best_iteration(const sr_train_result* r, int* best) {
  return guard([&] {
    need(r, "result");
    need(best, "best");
    *best = r->r.best_iteration;
  });
}

sr_status sr_train_result_write_history(const sr_train_result* r,
                                        const char* path) {
  return guard([&] {
    need(r, "result");
    auto os = open_out(path);
    io::write_history_csv(os, r->r.history);
    close_out(os, path);
  });
}

sr_status sr_train_result_theta(const sr_train_result* r, int which,
                                sr_theta** out) {
  return guard([&] {
    need(r, "result");
    need(out, "out");
    const auto& th = which == 0 ? r->r.theta_hat : r->r.best_theta_hat;
    const auto& ld =
        which == 0 ? r->r.certificate.lambda_delta
                   : r->r.best_certificate.lambda_delta;
    *out = new sr_theta{th, ld, r->r.certificate.rho};
  });
}

sr_status sr_train_result_controller(const sr_train_result* r, int which,
                                     sr_controller** out) {
  return guard([&] {
    need(r, "result");
    need(out, "out");
    *out = new sr_controller{which == 0 ? r->r.theta_tilde
                                        : r->r.best_theta_tilde};
  });
}

sr_status sr_train_result_certificate(const sr_train_result* r, int which,
                                      sr_certificate** out) {
  return guard([&] {
    need(r, "result");
    need(out, "out");
    *out = new sr_certificate{which == 0 ? r->r.certificate
                                         : r->r.best_certificate};
  });
}

sr_status sr_train_result_model(const sr_train_result* r, sr_plant** out) {
  return guard([&] {
    need(r, "result");
    need(out, "out");
    *out = new sr_plant{r->model};
  });
}

sr_status sr_train_result_sysid(const sr_train_result* r,
                                sr_sysid_result** out) {
  return guard([&] {
    need(r, "result");
    need(out, "out");
    *out = r->sysid ? new sr_sysid_result{*r->sysid} : nullptr;
  });
}

void sr_train_result_free(sr_train_result* r) { delete r; }

sr_status sr_sysid(const char* config_path, const char* dataset_csv,
                   int has_seed, uint64_t seed, sr_sysid_result** out) {
  return guard([&] {
    need(config_path, "config_path");
    need(out, "out");
    const auto doc = io::read_json(config_path);
    const auto base = std::filesystem::path(config_path).parent_path();
    require(doc.is_object() && doc.contains("sysid"), ErrorKind::kParse,
            std::string(config_path) + ": missing sysid section");
    auto s = io::sysid_settings_from_json(doc.at("sysid"), base);
    if (has_seed) {
      s.seed = seed;
      s.options.seed = seed;
    }
    std::optional<PlantSector> truth;
    std::optional<SysidDataset> data;
    if (dataset_csv != nullptr) {
      std::ifstream in(dataset_csv);
      require(static_cast<bool>(in), ErrorKind::kIo,
              std::string("cannot open '") + dataset_csv + "'");
      data = SysidDataset::read_csv(in);
    } else {
      require(doc.contains("true_plant"), ErrorKind::kParse,
              std::string(config_path) +
                  ": no dataset given and no true_plant to sample");
      truth = io::plant_from_json(doc.at("true_plant"), base);
    }
    *out = new sr_sysid_result{run_sysid(s, truth ? &*truth : nullptr,
                                         data ? &*data : nullptr)};
  });
}

sr_status sr_sysid_result_info(const sr_sysid_result* r, int* epochs,
                               double* final_loss, double* validation_mse,
                               double* d3_norm) {
  return guard([&] {
    need(r, "result");
    const auto& s = r->run.result;
    if (epochs) *epochs = static_cast<int>(s.loss.size());
    if (final_loss) *final_loss = s.loss.empty() ? NAN : s.loss.back();
    if (validation_mse) *validation_mse = s.validation_mse;
    if (d3_norm) *d3_norm = well_posedness_norm(s.nn.d3);
  });
}

sr_status sr_sysid_result_loss(const sr_sysid_result* r, int epoch,
                               double* loss, double* d3_norm) {
  return guard([&] {
    need(r, "result");
    const auto& s = r->run.result;
    require(epoch >= 0 && epoch < static_cast<int>(s.loss.size()),
            ErrorKind::kInvalidArgument, "epoch out of range");
    const auto e = static_cast<std::size_t>(epoch);
    if (loss) *loss = s.loss[e];
    if (d3_norm) *d3_norm = e < s.d3_norm.size() ? s.d3_norm[e] : NAN;
  });
}

sr_status sr_sysid_result_write_loss(const sr_sysid_result* r,
                                     const char* path) {
  return guard([&] {
    need(r, "result");
    write_sysid_loss(r->run.result, path);
  });
}

sr_status sr_sysid_result_save_model(const sr_sysid_result* r,
                                     const char* path) {
  return guard([&] {
    need(r, "result");
    need(path, "path");
    io::write_json(path, io::nn_plant_to_json(r->run.result.nn));
  });
}

sr_status sr_sysid_result_save_dataset(const sr_sysid_result* r,
                                       const char* path) {
  return guard([&] {
    need(r, "result");
    const auto& tr = r->run.train;
    const auto& te = r->run.test;
    SysidDataset all;
    all.x.resize(tr.x.rows(), tr.size() + te.size());
    all.u.resize(tr.u.rows(), tr.size() + te.size());
    all.x_next.resize(tr.x.rows(), tr.size() + te.size());
    all.x << tr.x, te.x;
    all.u << tr.u, te.u;
    all.x_next << tr.x_next, te.x_next;
    auto os = open_out(path);
    all.write_csv(os);
    close_out(os, path);
  });
}

void sr_sysid_result_free(sr_sysid_result* r) { delete r; }

}  // extern "C"
