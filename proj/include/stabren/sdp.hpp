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

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace stabren::sdp {

/// One nonzero of a symmetric coefficient matrix. Both (r, c) and (c, r) are
/// stored for off-diagonal entries.
struct Entry {
  int row;
  int col;
  double value;
};

/// F(x) = F0 + sum_i x_i F_i with symmetric F0, F_i of size dim x dim.
class AffineSymMatrix {
 public:
  AffineSymMatrix() = default;
  AffineSymMatrix(Matrix constant, std::vector<std::vector<Entry>> coeffs);

  /// Samples an affine map at 0 and at each unit vector. `f` must be affine
  /// in x and return a symmetric matrix.
  static AffineSymMatrix from_function(
      int num_vars, const std::function<Matrix(const Vector&)>& f);

  int dim() const { return static_cast<int>(constant_.rows()); }
  int num_vars() const { return static_cast<int>(coeffs_.size()); }
  const Matrix& constant() const { return constant_; }
  const std::vector<Entry>& coeff(int i) const {
    return coeffs_[static_cast<std::size_t>(i)];
  }

  Matrix evaluate(const Vector& x) const;

  /// Adds `shift` to the diagonal of the constant term.
  void shift_diagonal(double shift);
  /// Appends a variable whose coefficient is `scale` * I (used for margins).
  void append_identity_variable(double scale);
  /// Appends a variable with no coefficient.
  void append_zero_variable();

  /// Sparse triplet dump: header lines `dim <m>` and `vars <n>`, then one
  /// `<var> <row> <col> <value>` line per stored upper-triangular nonzero;
  /// var 0 is the constant term and var i+1 the coefficient of x_i.
  void write_triplets(std::ostream& os) const;

 private:
  Matrix constant_;
  std::vector<std::vector<Entry>> coeffs_;
};

/// minimize  c^T x + 1/2 sum_i w_i (x_i - x0_i)^2
/// s.t.      F_k(x) > 0 for every block,  A x + b > 0.
struct BarrierProblem {
  int num_vars = 0;
  Vector linear_cost;    // empty = 0
  Vector quad_weights;   // empty = no quadratic term
  Vector quad_center;
  std::vector<AffineSymMatrix> lmis;
  Matrix lin_a;          // rows x num_vars
  Vector lin_b;

  double objective(const Vector& x) const;
  /// Smallest eigenvalue over all blocks and linear slacks.
  double min_slack(const Vector& x) const;
};

struct BarrierOptions {
  double gap_tol = 1e-9;
  double mu = 20.0;
  double t_init = 1.0;
  int max_newton_per_center = 200;
  int max_outer = 60;
  double decrement_tol = 1e-10;
  /// Early exit once x[stop_index] >= stop_value (phase-I searches).
  std::optional<int> stop_index;
  double stop_value = 0.0;
};

struct BarrierResult {
  Vector x;
  double objective = 0.0;
  double gap_bound = 0.0;
  int newton_steps = 0;
  bool early_stop = false;
};

/// Log-barrier path following with damped Newton steps. `x_start` must be
/// strictly feasible (kInvalidArgument otherwise). Throws kSolver when
/// Newton stalls or iteration budgets run out before `gap_tol`.
BarrierResult solve_barrier(const BarrierProblem& problem,
                            const Vector& x_start,
                            const BarrierOptions& opts = {});

}  // namespace stabren::sdp
