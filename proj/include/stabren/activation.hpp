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

#include "stabren/common.hpp"

#include <string>
#include <vector>

namespace stabren {

/// Scalar activations known to the registry. Each entry carries its value,
/// derivative, default sector and slope bounds so that the slope-restriction
/// hypothesis behind well-posedness can be checked per activation.
enum class ActivationKind { kIdentity, kTanh, kRelu, kLeakyRelu, kVMinusSin };

struct Activation {
  ActivationKind kind = ActivationKind::kTanh;
  double param = 0.0;  // leaky_relu slope

  double value(double v) const;
  double slope(double v) const;

  double sector_alpha() const;
  double sector_beta() const;
  double slope_min() const { return sector_alpha(); }
  double slope_max() const { return sector_beta(); }
  // Every registered activation is slope restricted in its sector and passes
  // through the origin.
  bool slope_restricted() const { return true; }

  /// Registry name, e.g. "tanh" or "leaky_relu(0.1)".
  std::string name() const;
  static Activation from_name(const std::string& name);
};

/// Per-channel sector bounds [alpha_i, beta_i].
struct SectorSpec {
  Vector alpha;
  Vector beta;

  Eigen::Index size() const { return alpha.size(); }
  void validate() const;
  static SectorSpec uniform(Eigen::Index n, double alpha, double beta);
  static SectorSpec unit(Eigen::Index n) { return uniform(n, -1.0, 1.0); }
  bool is_unit() const;
};

/// A scalar channel (act(v) - shift * v) / scale. A raw activation has
/// shift 0 and scale 1; loop transformation composes into shift and scale.
struct Channel {
  Activation act;
  double shift = 0.0;
  double scale = 1.0;

  double value(double v) const { return (act.value(v) - shift * v) / scale; }
  double slope(double v) const { return (act.slope(v) - shift) / scale; }
};

/// Elementwise nonlinearity with per-channel sector bounds.
struct Nonlinearity {
  std::vector<Channel> channels;
  SectorSpec sector;

  Eigen::Index size() const {
    return static_cast<Eigen::Index>(channels.size());
  }
  Vector apply(const Vector& v) const;
  /// Diagonal of the Jacobian at v.
  Vector slope(const Vector& v) const;

  /// n copies of `act` using the activation's registered sector.
  static Nonlinearity uniform(const Activation& act, Eigen::Index n);
  static Nonlinearity with_sector(const Activation& act, SectorSpec sector);

  /// Returns (act - S v) L^{-1} per channel with sector [-1, 1], where
  /// S = (alpha + beta) / 2 and L = (beta - alpha) / 2. Requires alpha < beta.
  Nonlinearity loop_transformed() const;
  Vector center() const { return 0.5 * (sector.alpha + sector.beta); }
  Vector radius() const { return 0.5 * (sector.beta - sector.alpha); }

  /// True when every channel uses the same activation.
  bool homogeneous() const;
};

struct FixedPointOptions {
  double tol = 1e-10;
  int max_iterations = 500;
  double damping = 1.0;  // z <- (1 - damping) z + damping * g(...)
  int newton_iterations = 50;
  int polish_steps = 0;  // Newton refinements after convergence
};

struct FixedPointResult {
  Vector z;
  double residual = 0.0;
  int iterations = 0;
  bool used_newton = false;
};

/// Solves z = g(b + D z). Damped Picard first; if the iteration budget runs
/// out, Newton on the residual with backtracking. Throws kNonConvergence when
/// neither reaches `tol` (max-norm residual).
FixedPointResult solve_fixed_point(const Nonlinearity& g, const Matrix& d,
                                   const Vector& b, const Vector& z0,
                                   const FixedPointOptions& opts = {});

/// Jacobian of the solution of z = g(b + D z) with respect to b:
/// (I - g' D)^{-1} g'. Throws kSingular if I - g' D is singular.
Matrix implicit_sensitivity(const Vector& slope, const Matrix& d);

}  // namespace stabren
