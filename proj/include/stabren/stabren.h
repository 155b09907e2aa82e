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

/* C interface to the stabren library. Objects are opaque handles created by
 * the library and released with the matching *_free function. Every call
 * returns an sr_status; on failure sr_last_error() describes the problem
 * (per thread, valid until the next failing call on that thread). Arrays are
 * row-major and caller-allocated unless stated otherwise. */

#ifndef STABREN_H_
#define STABREN_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SR_API __declspec(dllexport)
#else
#define SR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sr_status {
  SR_OK = 0,
  SR_ERR_INVALID_ARGUMENT = 1,
  SR_ERR_DIMENSION = 2,
  SR_ERR_PARSE = 3,
  SR_ERR_IO = 4,
  SR_ERR_INFEASIBLE = 5,
  SR_ERR_SOLVER = 6,
  SR_ERR_NONCONVERGENCE = 7,
  SR_ERR_SINGULAR = 8,
  SR_ERR_ENVELOPE = 9,
  SR_ERR_NUMERIC = 10,
  SR_ERR_INTERNAL = 11
} sr_status;

typedef enum sr_grad_mode {
  SR_GRAD_ANALYTIC = 0,
  SR_GRAD_FINITE_DIFFERENCE = 1
} sr_grad_mode;

typedef struct sr_plant sr_plant;
typedef struct sr_controller sr_controller;
typedef struct sr_theta sr_theta;
typedef struct sr_certificate sr_certificate;
typedef struct sr_train_config sr_train_config;
typedef struct sr_train_result sr_train_result;
typedef struct sr_sysid_result sr_sysid_result;

typedef struct sr_iteration {
  int iteration;
  double mean_reward;
  double eval_reward;
  double lmi_margin;
  double certificate_margin;
  double grad_norm;
  double projection_distance;
  double learning_rate;
  double wall_time;
} sr_iteration;

SR_API const char* sr_version(void);
SR_API const char* sr_last_error(void);
SR_API const char* sr_status_name(sr_status status);

/* Plants (stored in sector form; LTI and implicit-network files convert). */
SR_API sr_status sr_plant_load(const char* path, sr_plant** out);
SR_API sr_status sr_plant_save(const sr_plant* plant, const char* path);
SR_API sr_status sr_plant_pendulum(sr_plant** out);
SR_API sr_status sr_plant_lti(int n_state, int n_input, int n_output,
                              const double* a, const double* b,
                              const double* c, sr_plant** out);
SR_API sr_status sr_plant_dims(const sr_plant* plant, int* n_state,
                               int* n_input, int* n_output, int* n_delta);
SR_API sr_status sr_plant_step(const sr_plant* plant, const double* x,
                               const double* u, double* x_next, double* y);
SR_API void sr_plant_free(sr_plant* plant);

/* Controllers (transformed form). */
SR_API sr_status sr_controller_load(const char* path, sr_controller** out);
SR_API sr_status sr_controller_save(const sr_controller* c, const char* path);
/* Zero controller with the given sizes and activation name. */
SR_API sr_status sr_controller_zero(int n_xi, int n_phi, int n_y, int n_u,
                                    const char* activation,
                                    sr_controller** out);
SR_API sr_status sr_controller_dims(const sr_controller* c, int* n_xi,
                                    int* n_phi, int* n_y, int* n_u);
SR_API void sr_controller_free(sr_controller* c);

/* Convex parameters theta_hat together with Lambda_Delta and rho. */
SR_API sr_status sr_theta_load(const char* path, sr_theta** out);
SR_API sr_status sr_theta_save(const sr_theta* t, const char* path);
SR_API sr_status sr_theta_n_phi(const sr_theta* t, int* n_phi);
SR_API void sr_theta_free(sr_theta* t);

SR_API sr_status sr_sample_feasible(const sr_plant* plant, double rho,
                                    uint64_t seed, int n_phi, double eps,
                                    sr_theta** out);
/* Projects onto {LMI >= eps I}; the target's Lambda_Delta is used (identity
 * when absent). distance may be NULL. */
SR_API sr_status sr_project(const sr_theta* target, const sr_plant* plant,
                            double rho, double eps, sr_theta** out,
                            double* distance);
SR_API sr_status sr_feasibility_margin(const sr_theta* t,
                                       const sr_plant* plant, double rho,
                                       double* margin);
/* Recovers controller and certificate; activation names the controller
 * nonlinearity (e.g. "tanh"). */
SR_API sr_status sr_recover(const sr_theta* t, const sr_plant* plant,
                            double rho, const char* activation,
                            sr_controller** controller,
                            sr_certificate** certificate);
/* Sparse-triplet dump of the projection program. */
SR_API sr_status sr_write_projection_program(const sr_theta* target,
                                             const sr_plant* plant,
                                             double rho, double eps,
                                             const char* path);

/* Certificates. */
SR_API sr_status sr_certify(const sr_plant* plant, const sr_controller* c,
                            double rho, sr_certificate** out);
SR_API sr_status sr_certificate_save(const sr_certificate* cert,
                                     const sr_plant* plant,
                                     const sr_controller* c,
                                     const char* path);
SR_API sr_status sr_certificate_load(const char* path, sr_certificate** out);
/* 1 when the stored hashes match plant and controller, else 0. */
SR_API sr_status sr_certificate_matches(const char* path,
                                        const sr_plant* plant,
                                        const sr_controller* c, int* match);
SR_API sr_status sr_certificate_info(const sr_certificate* cert, double* rho,
                                     double* margin, double* condition);
SR_API sr_status sr_decay_envelope(const sr_certificate* cert, double x0_norm,
                                   int k, double* bound);
SR_API void sr_certificate_free(sr_certificate* cert);

/* Closed-loop simulation from xi(0) = 0 for up to `horizon` steps. Stops
 * early when |x_0| >= angle_limit (angle_limit <= 0 disables this). x_out
 * holds (horizon + 1) * n_state values, xi_out (horizon + 1) * n_xi and
 * u_out horizon * n_u; any may be NULL. steps receives the number of
 * recorded states minus one. */
SR_API sr_status sr_simulate(const sr_plant* plant, const sr_controller* c,
                             const double* x0, int horizon,
                             double angle_limit, double* x_out,
                             double* xi_out, double* u_out, int* steps);

/* Training. A config file holds the training section and plant entries;
 * see the README for the keys. */
typedef void (*sr_iteration_callback)(const sr_iteration* it, void* user);

SR_API sr_status sr_train_config_load(const char* path,
                                      sr_train_config** out);
SR_API sr_status sr_train_config_set_rho(sr_train_config* cfg, double rho);
SR_API sr_status sr_train_config_set_eps(sr_train_config* cfg, double eps);
SR_API sr_status sr_train_config_set_seed(sr_train_config* cfg,
                                          uint64_t seed);
SR_API sr_status sr_train_config_set_horizon(sr_train_config* cfg,
                                             int horizon);
SR_API sr_status sr_train_config_set_iterations(sr_train_config* cfg,
                                                int iterations);
SR_API sr_status sr_train_config_set_grad_mode(sr_train_config* cfg,
                                               sr_grad_mode mode);
SR_API void sr_train_config_free(sr_train_config* cfg);

SR_API sr_status sr_train(const sr_train_config* cfg,
                          sr_iteration_callback callback, void* user,
                          sr_train_result** out);
SR_API sr_status sr_train_result_history(const sr_train_result* r,
                                         int index, sr_iteration* out,
                                         int* count);
SR_API sr_status sr_train_result_best_iteration(const sr_train_result* r,
                                                int* best);
SR_API sr_status sr_train_result_write_history(const sr_train_result* r,
                                               const char* path);
/* Final (which = 0) or best (which = 1) iterate. */
SR_API sr_status sr_train_result_theta(const sr_train_result* r, int which,
                                       sr_theta** out);
SR_API sr_status sr_train_result_controller(const sr_train_result* r,
                                            int which, sr_controller** out);
SR_API sr_status sr_train_result_certificate(const sr_train_result* r,
                                             int which,
                                             sr_certificate** out);
/* The plant used for projection and certification. */
SR_API sr_status sr_train_result_model(const sr_train_result* r,
                                       sr_plant** out);
/* The identified network when the config has a "sysid" section, else
 * *out = NULL. */
SR_API sr_status sr_train_result_sysid(const sr_train_result* r,
                                       sr_sysid_result** out);
SR_API void sr_train_result_free(sr_train_result* r);

/* System identification of an implicit network from a config's "sysid"
 * section. With dataset_csv == NULL transitions are generated from the
 * config's "true_plant". */
SR_API sr_status sr_sysid(const char* config_path, const char* dataset_csv,
                          int has_seed, uint64_t seed,
                          sr_sysid_result** out);
SR_API sr_status sr_sysid_result_info(const sr_sysid_result* r,
                                      int* epochs, double* final_loss,
                                      double* validation_mse,
                                      double* d3_norm);
SR_API sr_status sr_sysid_result_loss(const sr_sysid_result* r, int epoch,
                                      double* loss, double* d3_norm);
SR_API sr_status sr_sysid_result_write_loss(const sr_sysid_result* r,
                                            const char* path);
SR_API sr_status sr_sysid_result_save_model(const sr_sysid_result* r,
                                            const char* path);
SR_API sr_status sr_sysid_result_save_dataset(const sr_sysid_result* r,
                                              const char* path);
SR_API void sr_sysid_result_free(sr_sysid_result* r);

#ifdef __cplusplus
}
#endif

#endif  /* STABREN_H_ */
