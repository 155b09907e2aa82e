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

#include "stabren/plant.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace stabren {

/// One-step transitions, one sample per column.
struct SysidDataset {
  Matrix x;
  Matrix u;
  Matrix x_next;

  Eigen::Index size() const { return x.cols(); }
  void validate() const;
  /// Columns [first, first + count).
  SysidDataset slice(Eigen::Index first, Eigen::Index count) const;

  /// CSV with header x_0..x_{n-1},u_0..u_{m-1},xn_0..xn_{n-1}.
  void write_csv(std::ostream& os) const;
  static SysidDataset read_csv(std::istream& is);
};

/// Transitions of `plant` from states and inputs drawn uniformly from the
/// given boxes.
SysidDataset make_transition_dataset(const PlantSector& plant,
                                     const Vector& x_low, const Vector& x_high,
                                     const Vector& u_low, const Vector& u_high,
                                     Eigen::Index samples, std::uint64_t seed);

enum class SysidOptimizer { kGradientDescent, kAdam };

struct SysidOptions {
  double learning_rate = 1e-3;
  double lr_decay = 1.0;       // learning-rate multiplier per epoch
  double alpha = 0.99;        // d3 <- alpha / sigma * d3 when sigma >= 1
  int epochs = 100;
  Eigen::Index batch_size = 0;  // 0: full batch
  SysidOptimizer optimizer = SysidOptimizer::kGradientDescent;
  bool freeze_d3 = false;
  bool whiten = true;         // train on per-coordinate scaled data
  bool linear_warm_start = false;  // least-squares fit of [a b2] first
  std::uint64_t seed = 0;     // minibatch shuffling
};

struct SysidResult {
  ImplicitNnPlant nn;
  std::vector<double> loss;     // training MSE after each epoch
  std::vector<double> d3_norm;  // well-posedness norm after each epoch
  double validation_mse = 0.0;  // set by sysid_train_restarts
  int restart = 0;
};

using SysidCallback = std::function<void(int epoch, double loss)>;

/// Mean over samples and coordinates of the squared one-step error.
double sysid_mse(const ImplicitNnPlant& nn, const SysidDataset& data);

/// Fits the implicit network to the transitions. After every parameter
/// update, d3 is rescaled by alpha / sigma whenever sigma = ||d3|| >= 1.
/// Throws kNumeric on a non-finite loss.
SysidResult sysid_train(const SysidDataset& data, const ImplicitNnPlant& init,
                        const SysidOptions& opts,
                        const SysidCallback& on_epoch = {});

/// Trains from the initializations make_init(seed), make_init(seed + 1),
/// ... and keeps the model with the lowest validation MSE, stopping once it
/// reaches `target`.
SysidResult sysid_train_restarts(
    const SysidDataset& train, const SysidDataset& validation,
    const std::function<ImplicitNnPlant(std::uint64_t)>& make_init,
    const SysidOptions& opts, int restarts, double target,
    std::uint64_t seed, const SysidCallback& on_epoch = {});

/// Small random weights (Gaussian, standard deviation `scale`) with d3
/// rescaled to norm 0.5; c1 is supplied by the caller.
ImplicitNnPlant random_nn_plant(Eigen::Index n_state, Eigen::Index n_input,
                                Eigen::Index n_hidden, const Matrix& c1,
                                const Activation& act, double scale,
                                std::uint64_t seed);

}  // namespace stabren
