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

// stabren command-line driver. Talks to the library only through the C API.

#include <stabren/stabren.h>

#include "svg_plot.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

enum Exit {
  kOk = 0,
  kUsage = 1,
  kParse = 2,
  kInfeasible = 3,
  kSolver = 4,
  kEnvelope = 5,
};

// Library failure carrying the status it came from.
struct Failure {
  sr_status status;
  std::string context;
};

void check(sr_status s, const std::string& context) {
  if (s != SR_OK) throw Failure{s, context + ": " + sr_last_error()};
}

int exit_code(sr_status s) {
  switch (s) {
    case SR_OK: return kOk;
    case SR_ERR_INFEASIBLE: return kInfeasible;
    case SR_ERR_ENVELOPE: return kEnvelope;
    case SR_ERR_SOLVER:
    case SR_ERR_NONCONVERGENCE:
    case SR_ERR_SINGULAR:
    case SR_ERR_NUMERIC:
    case SR_ERR_INTERNAL: return kSolver;
    default: return kParse;
  }
}

template <typename T, void (*F)(T*)>
struct Deleter {
  void operator()(T* p) const { F(p); }
};
using Plant = std::unique_ptr<sr_plant, Deleter<sr_plant, sr_plant_free>>;
using Controller =
    std::unique_ptr<sr_controller, Deleter<sr_controller, sr_controller_free>>;
using Theta = std::unique_ptr<sr_theta, Deleter<sr_theta, sr_theta_free>>;
using Certificate =
    std::unique_ptr<sr_certificate,
                    Deleter<sr_certificate, sr_certificate_free>>;
using TrainConfig =
    std::unique_ptr<sr_train_config,
                    Deleter<sr_train_config, sr_train_config_free>>;
using TrainResult =
    std::unique_ptr<sr_train_result,
                    Deleter<sr_train_result, sr_train_result_free>>;
using SysidResult =
    std::unique_ptr<sr_sysid_result,
                    Deleter<sr_sysid_result, sr_sysid_result_free>>;

Plant load_plant(const std::string& path) {
  sr_plant* p = nullptr;
  check(sr_plant_load(path.c_str(), &p), "plant '" + path + "'");
  return Plant(p);
}

Controller load_controller(const std::string& path) {
  sr_controller* c = nullptr;
  check(sr_controller_load(path.c_str(), &c), "controller '" + path + "'");
  return Controller(c);
}

struct Common {
  std::optional<double> rho;
  double eps = 1e-6;
  std::optional<std::uint64_t> seed;
  std::optional<int> horizon;
  std::string out = ".";
  std::string grad_mode;
};

std::string out_path(const Common& c, const std::string& name) {
  return (fs::path(c.out) / name).string();
}

void ensure_out(const Common& c) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw Failure{SR_ERR_IO, "cannot create '" + c.out + "': " + ec.message()};
}

void plot(const svgplot::Chart& chart, const std::string& path) {
  if (!svgplot::write(chart, path)) {
    throw Failure{SR_ERR_IO, "cannot write '" + path + "'"};
  }
  std::cout << "wrote " << path << "\n";
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (tok.find_first_not_of(" \t", used) != std::string::npos) throw 0;
    } catch (...) {
      throw Failure{SR_ERR_PARSE, "bad number '" + tok + "' in '" + s + "'"};
    }
  }
  return v;
}

void save_artifacts(const sr_theta* th, const sr_controller* c,
                    const sr_certificate* cert, const sr_plant* plant,
                    const Common& o, const std::string& prefix) {
  const std::string t = out_path(o, prefix + "theta_hat.json");
  const std::string k = out_path(o, prefix + "controller.json");
  const std::string p = out_path(o, prefix + "certificate.json");
  if (th) check(sr_theta_save(th, t.c_str()), t);
  check(sr_controller_save(c, k.c_str()), k);
  check(sr_certificate_save(cert, plant, c, p.c_str()), p);
  if (th) std::cout << "wrote " << t << "\n";
  std::cout << "wrote " << k << "\nwrote " << p << "\n";
}

void print_certificate(const sr_certificate* cert) {
  double rho = 0, margin = 0, cond = 0;
  check(sr_certificate_info(cert, &rho, &margin, &cond), "certificate");
  std::printf("certificate: rho = %.6g, lmi max eigenvalue = %.3e, "
              "cond(P) = %.4g\n",
              rho, margin, cond);
}

// ---- project -------------------------------------------------------------

struct ProjectArgs {
  std::string theta, plant, activation = "tanh";
  int n_phi = 4;
  bool dump_program = false;
};

int cmd_project(const ProjectArgs& a, const Common& o) {
  if (!o.rho) throw Failure{SR_ERR_INVALID_ARGUMENT, "--rho is required"};
  ensure_out(o);
  Plant plant = load_plant(a.plant);
  Theta projected;
  sr_theta* raw = nullptr;
  if (!a.theta.empty()) {
    check(sr_theta_load(a.theta.c_str(), &raw), "theta '" + a.theta + "'");
    Theta target(raw);
    if (a.dump_program) {
      const std::string p = out_path(o, "projection_program.txt");
      check(sr_write_projection_program(target.get(), plant.get(), *o.rho,
                                        o.eps, p.c_str()),
            p);
      std::cout << "wrote " << p << "\n";
    }
    double distance = 0;
    check(sr_project(target.get(), plant.get(), *o.rho, o.eps, &raw,
                     &distance),
          "projection");
    projected.reset(raw);
    std::printf("projection distance: %.6e\n", distance);
  } else {
    check(sr_sample_feasible(plant.get(), *o.rho, o.seed.value_or(0), a.n_phi,
                             o.eps, &raw),
          "feasible sample");
    projected.reset(raw);
    std::printf("sampled feasible point (seed %llu)\n",
                static_cast<unsigned long long>(o.seed.value_or(0)));
    if (a.dump_program) {
      const std::string p = out_path(o, "projection_program.txt");
      check(sr_write_projection_program(projected.get(), plant.get(), *o.rho,
                                        o.eps, p.c_str()),
            p);
      std::cout << "wrote " << p << "\n";
    }
  }
  double margin = 0;
  check(sr_feasibility_margin(projected.get(), plant.get(), *o.rho, &margin),
        "margin");
  std::printf("lmi margin: %.6e\n", margin);
  sr_controller* c = nullptr;
  sr_certificate* cert = nullptr;
  check(sr_recover(projected.get(), plant.get(), *o.rho, a.activation.c_str(),
                   &c, &cert),
        "recovery");
  Controller ctrl(c);
  Certificate certificate(cert);
  print_certificate(cert);
  save_artifacts(projected.get(), c, cert, plant.get(), o, "");
  return kOk;
}

// ---- certify -------------------------------------------------------------

struct CertifyArgs {
  std::string controller, plant;
};

int cmd_certify(const CertifyArgs& a, const Common& o) {
  if (!o.rho) throw Failure{SR_ERR_INVALID_ARGUMENT, "--rho is required"};
  Plant plant = load_plant(a.plant);
  Controller ctrl = load_controller(a.controller);
  sr_certificate* raw = nullptr;
  const sr_status s = sr_certify(plant.get(), ctrl.get(), *o.rho, &raw);
  if (s == SR_ERR_INFEASIBLE) {
    std::cout << "no certificate: " << sr_last_error() << "\n";
    return kInfeasible;
  }
  check(s, "certification");
  Certificate cert(raw);
  ensure_out(o);
  print_certificate(raw);
  const std::string p = out_path(o, "certificate.json");
  check(sr_certificate_save(raw, plant.get(), ctrl.get(), p.c_str()), p);
  std::cout << "wrote " << p << "\n";
  return kOk;
}

// ---- simulate ------------------------------------------------------------

struct SimulateArgs {
  std::string controller, plant, certificate;
  std::vector<std::string> x0;
  std::string grid_box;
  int grid = 0;
  double angle_limit = 0.0;
  double tolerance = 1e-2;
};

int cmd_simulate(const SimulateArgs& a, const Common& o) {
  Plant plant = load_plant(a.plant);
  Controller ctrl = load_controller(a.controller);
  int n = 0, nxi = 0, nu = 0;
  check(sr_plant_dims(plant.get(), &n, nullptr, nullptr, nullptr), "plant");
  check(sr_controller_dims(ctrl.get(), &nxi, nullptr, nullptr, &nu),
        "controller");
  const int horizon = o.horizon.value_or(1000);

  std::vector<std::vector<double>> starts;
  for (const auto& s : a.x0) {
    auto v = parse_list(s);
    if (static_cast<int>(v.size()) != n) {
      throw Failure{SR_ERR_DIMENSION, "--x0 '" + s + "' needs " +
                                          std::to_string(n) + " entries"};
    }
    starts.push_back(v);
  }
  if (a.grid > 0) {
    const auto box = parse_list(a.grid_box);
    if (n != 2 || box.size() != 4) {
      throw Failure{SR_ERR_INVALID_ARGUMENT,
                    "--grid needs a 2-state plant and --box lo0,hi0,lo1,hi1"};
    }
    for (int i = 0; i < a.grid; ++i) {
      for (int j = 0; j < a.grid; ++j) {
        const double fi = a.grid == 1 ? 0.5 : double(i) / (a.grid - 1);
        const double fj = a.grid == 1 ? 0.5 : double(j) / (a.grid - 1);
        starts.push_back({box[0] + fi * (box[1] - box[0]),
                          box[2] + fj * (box[3] - box[2])});
      }
    }
  }
  if (starts.empty()) {
    throw Failure{SR_ERR_INVALID_ARGUMENT, "no initial states (--x0 or --grid)"};
  }

  Certificate cert;
  if (!a.certificate.empty()) {
    sr_certificate* raw = nullptr;
    check(sr_certificate_load(a.certificate.c_str(), &raw),
          "certificate '" + a.certificate + "'");
    cert.reset(raw);
    int match = 0;
    check(sr_certificate_matches(a.certificate.c_str(), plant.get(),
                                 ctrl.get(), &match),
          "certificate");
    if (!match) {
      std::cerr << "warning: certificate was issued for a different "
                   "plant/controller pair\n";
    }
  }

  ensure_out(o);
  const std::string csv = out_path(o, "trajectories.csv");
  std::ofstream f(csv);
  if (!f) throw Failure{SR_ERR_IO, "cannot write '" + csv + "'"};
  f.precision(17);
  f << "trajectory,k";
  for (int i = 0; i < n; ++i) f << ",x_" << i;
  for (int i = 0; i < nxi; ++i) f << ",xi_" << i;
  for (int i = 0; i < nu; ++i) f << ",u_" << i;
  if (cert) f << ",norm,envelope";
  f << "\n";

  svgplot::Chart chart{"Closed-loop phase portrait", "x_0", "x_1", false,
                       false, {}, false};
  std::vector<double> xs(static_cast<std::size_t>((horizon + 1) * n));
  std::vector<double> xis(static_cast<std::size_t>((horizon + 1) * nxi));
  std::vector<double> us(static_cast<std::size_t>(std::max(1, horizon * nu)));
  int violations = 0, converged = 0, terminated = 0;
  std::vector<int> terminated_ids;
  for (std::size_t t = 0; t < starts.size(); ++t) {
    int steps = 0;
    check(sr_simulate(plant.get(), ctrl.get(), starts[t].data(), horizon,
                      a.angle_limit, xs.data(), xis.data(), us.data(), &steps),
          "simulation " + std::to_string(t));
    auto zeta_norm = [&](int k) {
      double s = 0;
      for (int i = 0; i < n; ++i) s += xs[k * n + i] * xs[k * n + i];
      for (int i = 0; i < nxi; ++i) s += xis[k * nxi + i] * xis[k * nxi + i];
      return std::sqrt(s);
    };
    const double z0 = zeta_norm(0);
    for (int k = 0; k <= steps; ++k) {
      f << t << "," << k;
      for (int i = 0; i < n; ++i) f << "," << xs[k * n + i];
      for (int i = 0; i < nxi; ++i) f << "," << xis[k * nxi + i];
      for (int i = 0; i < nu; ++i) {
        f << ",";
        if (k < steps) f << us[k * nu + i];
      }
      if (cert) {
        double bound = 0;
        check(sr_decay_envelope(cert.get(), z0, k, &bound), "envelope");
        const double nz = zeta_norm(k);
        f << "," << nz << "," << bound;
        if (nz > bound + 1e-8) {
          ++violations;
          std::cerr << "envelope violation: trajectory " << t << " step " << k
                    << ": |zeta| = " << nz << " > " << bound << "\n";
        }
      }
      f << "\n";
    }
    double xn = 0;
    for (int i = 0; i < n; ++i) xn += xs[steps * n + i] * xs[steps * n + i];
    xn = std::sqrt(xn);
    if (steps < horizon) {
      ++terminated;
      terminated_ids.push_back(static_cast<int>(t));
    } else if (xn <= a.tolerance) {
      ++converged;
    }
    if (n >= 2) {
      svgplot::Series s;
      for (int k = 0; k <= steps; ++k) {
        s.x.push_back(xs[k * n]);
        s.y.push_back(xs[k * n + 1]);
      }
      s.color = steps < horizon ? "#d62728" : "#1f77b4";
      chart.series.push_back(std::move(s));
    }
  }
  f.close();
  std::cout << "wrote " << csv << "\n";
  if (n >= 2) plot(chart, out_path(o, "phase_portrait.svg"));

  const int kept = static_cast<int>(starts.size()) - terminated;
  std::printf("trajectories: %zu, converged (|x(T)| <= %g): %d of %d "
              "non-terminated\n",
              starts.size(), a.tolerance, converged, kept);
  if (!terminated_ids.empty()) {
    std::cout << "terminated early:";
    for (int id : terminated_ids) {
      std::cout << " " << id << " (";
      for (int i = 0; i < n; ++i) std::cout << (i ? "," : "") << starts[id][i];
      std::cout << ")";
    }
    std::cout << "\n";
  }
  if (cert) {
    std::printf("envelope violations: %d\n", violations);
    if (violations > 0) return kEnvelope;
  }
  return kOk;
}

// ---- train / sysid ---------------------------------------------------------

void write_sysid_outputs(const sr_sysid_result* r, const Common& o,
                         bool with_dataset) {
  const std::string model = out_path(o, "nn_plant.json");
  const std::string loss = out_path(o, "sysid_loss.csv");
  check(sr_sysid_result_save_model(r, model.c_str()), model);
  check(sr_sysid_result_write_loss(r, loss.c_str()), loss);
  std::cout << "wrote " << model << "\nwrote " << loss << "\n";
  if (with_dataset) {
    const std::string data = out_path(o, "sysid_dataset.csv");
    check(sr_sysid_result_save_dataset(r, data.c_str()), data);
    std::cout << "wrote " << data << "\n";
  }
  int epochs = 0;
  double final_loss = 0, val = 0, d3 = 0;
  check(sr_sysid_result_info(r, &epochs, &final_loss, &val, &d3), "sysid");
  svgplot::Chart chart{"System identification loss", "epoch", "MSE", true,
                       false, {}, false};
  svgplot::Series s;
  for (int e = 0; e < epochs; ++e) {
    double l = 0;
    check(sr_sysid_result_loss(r, e, &l, nullptr), "sysid loss");
    s.x.push_back(e + 1);
    s.y.push_back(l);
  }
  chart.series.push_back(std::move(s));
  plot(chart, out_path(o, "sysid_loss.svg"));
  std::printf("sysid: %d epochs, train MSE %.3e, held-out MSE %.3e, "
              "|D3| = %.4f\n",
              epochs, final_loss, val, d3);
}

struct TrainArgs {
  std::string config;
  std::optional<int> iterations;
  bool quiet = false;
};

void on_iteration(const sr_iteration* it, void* user) {
  if (*static_cast<bool*>(user)) return;
  std::fprintf(stderr,
               "iter %3d  reward %9.4f  eval %9.4f  lmi margin %.3e  "
               "|grad| %.3e  step %.3e  %.1fs\n",
               it->iteration, it->mean_reward, it->eval_reward,
               it->lmi_margin, it->grad_norm, it->projection_distance,
               it->wall_time);
}

int cmd_train(TrainArgs a, const Common& o) {
  sr_train_config* raw = nullptr;
  check(sr_train_config_load(a.config.c_str(), &raw),
        "config '" + a.config + "'");
  TrainConfig cfg(raw);
  if (o.rho) check(sr_train_config_set_rho(raw, *o.rho), "--rho");
  check(sr_train_config_set_eps(raw, o.eps), "--eps");
  if (o.seed) check(sr_train_config_set_seed(raw, *o.seed), "--seed");
  if (o.horizon) check(sr_train_config_set_horizon(raw, *o.horizon), "--horizon");
  if (a.iterations) {
    check(sr_train_config_set_iterations(raw, *a.iterations), "--iterations");
  }
  if (!o.grad_mode.empty()) {
    check(sr_train_config_set_grad_mode(raw, o.grad_mode == "analytic"
                                                 ? SR_GRAD_ANALYTIC
                                                 : SR_GRAD_FINITE_DIFFERENCE),
          "--grad-mode");
  }
  ensure_out(o);
  sr_train_result* rr = nullptr;
  check(sr_train(raw, on_iteration, &a.quiet, &rr), "training");
  TrainResult result(rr);

  sr_sysid_result* sr = nullptr;
  check(sr_train_result_sysid(rr, &sr), "sysid");
  if (sr) {
    SysidResult sysid(sr);
    write_sysid_outputs(sr, o, false);
  }
  sr_plant* mp = nullptr;
  check(sr_train_result_model(rr, &mp), "model");
  Plant model(mp);
  const std::string model_path = out_path(o, "model_plant.json");
  check(sr_plant_save(mp, model_path.c_str()), model_path);
  std::cout << "wrote " << model_path << "\n";

  for (int which = 0; which < 2; ++which) {
    sr_theta* th = nullptr;
    sr_controller* c = nullptr;
    sr_certificate* cert = nullptr;
    check(sr_train_result_theta(rr, which, &th), "theta");
    Theta t(th);
    check(sr_train_result_controller(rr, which, &c), "controller");
    Controller k(c);
    check(sr_train_result_certificate(rr, which, &cert), "certificate");
    Certificate ce(cert);
    save_artifacts(th, c, cert, mp, o, which == 0 ? "" : "best_");
  }

  const std::string hist = out_path(o, "history.csv");
  check(sr_train_result_write_history(rr, hist.c_str()), hist);
  std::cout << "wrote " << hist << "\n";

  int count = 0, best = 0;
  check(sr_train_result_history(rr, 0, nullptr, &count), "history");
  check(sr_train_result_best_iteration(rr, &best), "history");
  svgplot::Chart chart{"Reward per iteration", "iteration", "mean reward",
                       false, false, {}, true};
  svgplot::Series batch{"training batch", {}, {}, "", true};
  svgplot::Series eval{"evaluation set", {}, {}, "", true};
  double first = 0, top = 0;
  for (int i = 0; i < count; ++i) {
    sr_iteration it{};
    check(sr_train_result_history(rr, i, &it, nullptr), "history");
    batch.x.push_back(it.iteration);
    batch.y.push_back(it.mean_reward);
    eval.x.push_back(it.iteration);
    eval.y.push_back(it.eval_reward);
    if (i == 0) first = it.eval_reward;
    if (it.iteration == best) top = it.eval_reward;
  }
  chart.series = {batch, eval};
  plot(chart, out_path(o, "reward_curve.svg"));
  std::printf("iterations: %d, evaluation reward %.4f -> best %.4f "
              "(iteration %d)\n",
              count, first, top, best);
  sr_certificate* fc = nullptr;
  check(sr_train_result_certificate(rr, 0, &fc), "certificate");
  Certificate final_cert(fc);
  print_certificate(fc);
  return kOk;
}

struct SysidArgs {
  std::string config, dataset;
};

int cmd_sysid(const SysidArgs& a, const Common& o) {
  ensure_out(o);
  sr_sysid_result* raw = nullptr;
  check(sr_sysid(a.config.c_str(), a.dataset.empty() ? nullptr : a.dataset.c_str(),
                 o.seed.has_value(), o.seed.value_or(0), &raw),
        "sysid");
  SysidResult r(raw);
  write_sysid_outputs(raw, o, a.dataset.empty());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stability-constrained recurrent equilibrium controllers"};
  app.set_version_flag("--version", sr_version());
  app.require_subcommand(1);

  Common o;
  auto add_common = [&](CLI::App* s, bool rho, bool horizon, bool grad) {
    if (rho) s->add_option("--rho", o.rho, "exponential decay rate in [0, 1)");
    s->add_option("--eps", o.eps, "required LMI margin")->capture_default_str();
    s->add_option("--seed", o.seed, "random seed");
    if (horizon) s->add_option("--horizon", o.horizon, "simulation horizon");
    s->add_option("--out", o.out, "output directory")->capture_default_str();
    if (grad) {
      s->add_option("--grad-mode", o.grad_mode, "gradient mode")
          ->check(CLI::IsMember({"analytic", "finite_difference"}));
    }
  };

  ProjectArgs pa;
  auto* project = app.add_subcommand(
      "project", "project a parameter point onto the certified set");
  project->add_option("--theta", pa.theta,
                      "convex parameter file (omit to sample a feasible point)")
      ->check(CLI::ExistingFile);
  project->add_option("--plant", pa.plant, "plant file")
      ->required()
      ->check(CLI::ExistingFile);
  project->add_option("--n-phi", pa.n_phi, "controller width when sampling")
      ->capture_default_str();
  project->add_option("--activation", pa.activation, "controller activation")
      ->capture_default_str();
  project->add_flag("--dump-program", pa.dump_program,
                    "also write the projection program as sparse triplets");
  add_common(project, true, false, false);

  CertifyArgs ca;
  auto* certify = app.add_subcommand(
      "certify", "search a stability certificate for a fixed controller");
  certify->add_option("--controller", ca.controller, "controller file")
      ->required()
      ->check(CLI::ExistingFile);
  certify->add_option("--plant", ca.plant, "plant file")
      ->required()
      ->check(CLI::ExistingFile);
  add_common(certify, true, false, false);

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "closed-loop simulation");
  simulate->add_option("--controller", sa.controller, "controller file")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("--plant", sa.plant, "plant file")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("--certificate", sa.certificate,
                       "certificate file; enables the envelope check")
      ->check(CLI::ExistingFile);
  simulate->add_option("--x0", sa.x0, "initial state, comma separated");
  simulate->add_option("--grid", sa.grid, "N x N grid of initial states");
  simulate->add_option("--box", sa.grid_box, "grid box lo0,hi0,lo1,hi1")
      ->default_str("-3.141592653589793,3.141592653589793,-8,8");
  sa.grid_box = "-3.141592653589793,3.141592653589793,-8,8";
  simulate->add_option("--angle-limit", sa.angle_limit,
                       "stop when |x_0| reaches this value (0: never)")
      ->capture_default_str();
  simulate->add_option("--tolerance", sa.tolerance,
                       "final-state norm counted as converged")
      ->capture_default_str();
  add_common(simulate, false, true, false);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "certified policy training");
  train->add_option("--config", ta.config, "experiment file")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--iterations", ta.iterations, "override iteration count");
  train->add_flag("--quiet", ta.quiet, "no per-iteration progress");
  add_common(train, true, true, true);

  SysidArgs ya;
  auto* sysid = app.add_subcommand("sysid", "fit an implicit network plant");
  sysid->add_option("--config", ya.config, "file with a sysid section")
      ->required()
      ->check(CLI::ExistingFile);
  sysid->add_option("--dataset", ya.dataset, "transition CSV")
      ->check(CLI::ExistingFile);
  add_common(sysid, false, false, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*project) return cmd_project(pa, o);
    if (*certify) return cmd_certify(ca, o);
    if (*simulate) return cmd_simulate(sa, o);
    if (*train) return cmd_train(ta, o);
    if (*sysid) return cmd_sysid(ya, o);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.context << "\n";
    if (f.status == SR_ERR_INVALID_ARGUMENT && f.context.rfind("--", 0) == 0) {
      return kUsage;
    }
    return exit_code(f.status);
  }
  return kUsage;
}
