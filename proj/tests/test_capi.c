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

/* Exercises the shared library through its C header only. */

#include "stabren/stabren.h"

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

static int failures = 0;

#define CHECK(cond)                                                  \
  do {                                                               \
    if (!(cond)) {                                                   \
      fprintf(stderr, "%s:%d: CHECK(%s) failed; last error: %s\n",   \
              __FILE__, __LINE__, #cond, sr_last_error());           \
      ++failures;                                                    \
    }                                                                \
  } while (0)

static int callbacks = 0;
static void on_iteration(const sr_iteration* it, void* user) {
  (void)user;
  if (it->iteration == callbacks) ++callbacks;
}

static void path_in(char* buf, size_t n, const char* dir, const char* name) {
  snprintf(buf, n, "%s/%s", dir, name);
}

int main(int argc, char** argv) {
  if (argc < 3) {
    fprintf(stderr, "usage: %s <scratch dir> <configs dir>\n", argv[0]);
    return 2;
  }
  const char* dir = argv[1];
  const char* cfgdir = argv[2];
  char path[1024], path2[1024];

  CHECK(strlen(sr_version()) > 0);
  CHECK(strcmp(sr_status_name(SR_ERR_INFEASIBLE), "infeasible") == 0);

  /* Errors come back as codes. */
  sr_plant* bad = NULL;
  CHECK(sr_plant_pendulum(NULL) == SR_ERR_INVALID_ARGUMENT);
  CHECK(sr_plant_load("/nonexistent/plant.json", &bad) == SR_ERR_IO);
  CHECK(bad == NULL);
  CHECK(strlen(sr_last_error()) > 0);

  /* An unstable scalar plant has no certificate with the zero controller. */
  const double a = 2.0, b = 1.0, c = 1.0;
  sr_plant* unstable = NULL;
  sr_controller* zero = NULL;
  sr_certificate* none = NULL;
  CHECK(sr_plant_lti(1, 1, 1, &a, &b, &c, &unstable) == SR_OK);
  CHECK(sr_controller_zero(1, 1, 1, 1, "tanh", &zero) == SR_OK);
  CHECK(sr_certify(unstable, zero, 0.99, &none) == SR_ERR_INFEASIBLE);
  CHECK(none == NULL);

  /* Sample, recover and certify on the pendulum. */
  sr_plant* pend = NULL;
  sr_theta* theta = NULL;
  sr_theta* proj = NULL;
  sr_controller* ctrl = NULL;
  sr_certificate* cert = NULL;
  sr_certificate* cert2 = NULL;
  double margin = 0.0, dist = -1.0, rho = 0.0, lmi = 0.0, cond = 0.0;
  int ns = 0, ni = 0, no = 0, nd = 0, match = -1;
  CHECK(sr_plant_pendulum(&pend) == SR_OK);
  CHECK(sr_plant_dims(pend, &ns, &ni, &no, &nd) == SR_OK);
  CHECK(ns == 2 && ni == 1 && no == 1 && nd == 1);
  CHECK(sr_sample_feasible(pend, 0.99, 5, 3, 1e-6, &theta) == SR_OK);
  CHECK(sr_feasibility_margin(theta, pend, 0.99, &margin) == SR_OK);
  CHECK(margin >= 1e-6 - 1e-8);
  CHECK(sr_project(theta, pend, 0.99, 1e-6, &proj, &dist) == SR_OK);
  CHECK(dist >= 0.0 && dist <= 1e-6);
  CHECK(sr_recover(theta, pend, 0.99, "tanh", &ctrl, &cert) == SR_OK);
  CHECK(sr_certificate_info(cert, &rho, &lmi, &cond) == SR_OK);
  CHECK(rho == 0.99 && lmi < 0.0 && cond >= 1.0);
  CHECK(sr_certify(pend, ctrl, 0.99, &cert2) == SR_OK);

  path_in(path, sizeof path, dir, "capi_cert.json");
  CHECK(sr_certificate_save(cert, pend, ctrl, path) == SR_OK);
  CHECK(sr_certificate_matches(path, pend, ctrl, &match) == SR_OK);
  CHECK(match == 1);
  sr_controller* zero2 = NULL;
  CHECK(sr_controller_zero(2, 3, 1, 1, "tanh", &zero2) == SR_OK);
  CHECK(sr_certificate_matches(path, pend, zero2, &match) == SR_OK);
  CHECK(match == 0);

  path_in(path2, sizeof path2, dir, "capi_ctrl.json");
  sr_controller* back = NULL;
  int nxi = 0, nphi = 0, ny = 0, nu = 0;
  CHECK(sr_controller_save(ctrl, path2) == SR_OK);
  CHECK(sr_controller_load(path2, &back) == SR_OK);
  CHECK(sr_controller_dims(back, &nxi, &nphi, &ny, &nu) == SR_OK);
  CHECK(nxi == 2 && nphi == 3 && ny == 1 && nu == 1);
  CHECK(sr_certificate_matches(path, pend, back, &match) == SR_OK);
  CHECK(match == 1);

  /* Rest stays at rest; other starts stay inside the envelope. */
  enum { T = 300 };
  static double xs[(T + 1) * 2], xis[(T + 1) * 2], us[T];
  int steps = -1;
  const double origin[2] = {0.0, 0.0};
  CHECK(sr_simulate(pend, ctrl, origin, T, 0.0, xs, xis, us, &steps) == SR_OK);
  CHECK(steps == T);
  int nonzero = 0;
  for (int i = 0; i < (T + 1) * 2; ++i) nonzero += xs[i] != 0.0 || xis[i] != 0.0;
  for (int i = 0; i < T; ++i) nonzero += us[i] != 0.0;
  CHECK(nonzero == 0);

  const double x0[2] = {0.8, -1.5};
  CHECK(sr_simulate(pend, ctrl, x0, T, 0.0, xs, xis, NULL, &steps) == SR_OK);
  const double n0 = sqrt(x0[0] * x0[0] + x0[1] * x0[1]);
  int outside = 0;
  for (int k = 0; k <= steps; ++k) {
    double bound = 0.0;
    sr_decay_envelope(cert, n0, k, &bound);
    const double n = sqrt(xs[2 * k] * xs[2 * k] + xs[2 * k + 1] * xs[2 * k + 1] +
                          xis[2 * k] * xis[2 * k] +
                          xis[2 * k + 1] * xis[2 * k + 1]);
    outside += n > bound + 1e-9;
  }
  CHECK(outside == 0);

  /* A short training run. */
  sr_train_config* cfg = NULL;
  sr_train_result* res = NULL;
  sr_iteration rows[8];
  int count = 0, best = -1;
  sr_sysid_result* sys = (sr_sysid_result*)1;
  path_in(path, sizeof path, cfgdir, "smoke.cfg");
  CHECK(sr_train_config_load(path, &cfg) == SR_OK);
  CHECK(sr_train_config_set_iterations(cfg, 3) == SR_OK);
  CHECK(sr_train_config_set_rho(cfg, 1.5) == SR_ERR_INVALID_ARGUMENT);
  CHECK(sr_train(cfg, on_iteration, NULL, &res) == SR_OK);
  CHECK(callbacks == 4);
  CHECK(sr_train_result_history(res, 0, NULL, &count) == SR_OK);
  CHECK(count == 4);
  CHECK(sr_train_result_best_iteration(res, &best) == SR_OK);
  CHECK(best >= 0 && best <= 3);
  for (int i = 0; i < 4 && i < count; ++i) {
    CHECK(sr_train_result_history(res, i, &rows[i], NULL) == SR_OK);
    CHECK(rows[i].iteration == i);
    CHECK(rows[i].lmi_margin >= 1e-6 - 1e-8);
  }
  CHECK(sr_train_result_history(res, 4, rows, NULL) == SR_ERR_INVALID_ARGUMENT);
  CHECK(sr_train_result_sysid(res, &sys) == SR_OK);
  CHECK(sys == NULL);
  path_in(path, sizeof path, dir, "capi_history.csv");
  CHECK(sr_train_result_write_history(res, path) == SR_OK);

  sr_train_result_free(res);
  sr_train_config_free(cfg);
  sr_controller_free(back);
  sr_controller_free(zero2);
  sr_certificate_free(cert2);
  sr_certificate_free(cert);
  sr_controller_free(ctrl);
  sr_theta_free(proj);
  sr_theta_free(theta);
  sr_plant_free(pend);
  sr_controller_free(zero);
  sr_plant_free(unstable);
  sr_plant_free(NULL);

  printf("%s\n", failures ? "FAILED" : "OK");
  return failures ? 1 : 0;
}
