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

#include "stabren/sdp.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace stabren::sdp {

AffineSymMatrix::AffineSymMatrix(Matrix constant,
                                 std::vector<std::vector<Entry>> coeffs)
    : constant_(std::move(constant)), coeffs_(std::move(coeffs)) {
  require(constant_.rows() == constant_.cols(), ErrorKind::kDimensionMismatch,
          "affine matrix: constant must be square");
}

AffineSymMatrix AffineSymMatrix::from_function(
    int num_vars, const std::function<Matrix(const Vector&)>& f) {
  Vector x = Vector::Zero(num_vars);
  Matrix f0 = sym(f(x));
  const auto m = f0.rows();
  std::vector<std::vector<Entry>> coeffs(static_cast<std::size_t>(num_vars));
  for (int i = 0; i < num_vars; ++i) {
    x.setZero();
    x(i) = 1.0;
    const Matrix fi = sym(f(x)) - f0;
    require(fi.rows() == m && fi.cols() == m, ErrorKind::kDimensionMismatch,
            "affine matrix: inconsistent dimension");
    auto& out = coeffs[static_cast<std::size_t>(i)];
    for (Eigen::Index c = 0; c < m; ++c)
      for (Eigen::Index r = 0; r < m; ++r)
        if (fi(r, c) != 0.0)
          out.push_back({static_cast<int>(r), static_cast<int>(c), fi(r, c)});
  }
  return AffineSymMatrix(std::move(f0), std::move(coeffs));
}

Matrix AffineSymMatrix::evaluate(const Vector& x) const {
  require(x.size() == num_vars(), ErrorKind::kDimensionMismatch,
          "affine matrix: variable count");
  Matrix out = constant_;
  for (int i = 0; i < num_vars(); ++i) {
    if (x(i) == 0.0) continue;
    for (const Entry& e : coeff(i)) out(e.row, e.col) += x(i) * e.value;
  }
  return out;
}

void AffineSymMatrix::shift_diagonal(double shift) {
  constant_.diagonal().array() += shift;
}

void AffineSymMatrix::append_identity_variable(double scale) {
  std::vector<Entry> e;
  for (int i = 0; i < dim(); ++i) e.push_back({i, i, scale});
  coeffs_.push_back(std::move(e));
}

void AffineSymMatrix::append_zero_variable() { coeffs_.emplace_back(); }

void AffineSymMatrix::write_triplets(std::ostream& os) const {
  const auto old = os.precision(17);
  os << "dim " << dim() << "\n";
  os << "vars " << num_vars() << "\n";
  for (int c = 0; c < dim(); ++c)
    for (int r = 0; r <= c; ++r)
      if (constant_(r, c) != 0.0)
        os << 0 << " " << r << " " << c << " " << constant_(r, c) << "\n";
  for (int i = 0; i < num_vars(); ++i)
    for (const Entry& e : coeff(i))
      if (e.row <= e.col)
        os << i + 1 << " " << e.row << " " << e.col << " " << e.value << "\n";
  os.precision(old);
}

double BarrierProblem::objective(const Vector& x) const {
  double f = 0.0;
  if (linear_cost.size() > 0) f += linear_cost.dot(x);
  if (quad_weights.size() > 0)
    f += 0.5 * (quad_weights.array() * (x - quad_center).array().square()).sum();
  return f;
}

double BarrierProblem::min_slack(const Vector& x) const {
  double s = std::numeric_limits<double>::infinity();
  for (const auto& f : lmis) s = std::min(s, min_eigenvalue(f.evaluate(x)));
  if (lin_a.rows() > 0) s = std::min(s, (lin_a * x + lin_b).minCoeff());
  return s;
}

namespace {

struct BlockState {
  Eigen::LLT<Matrix> llt;
  double logdet = 0.0;
};

// Cholesky of every block; false if any block is not positive definite.
bool factor_blocks(const BarrierProblem& p, const Vector& x,
                   std::vector<BlockState>& states, Vector& lin_slack) {
  states.resize(p.lmis.size());
  for (std::size_t k = 0; k < p.lmis.size(); ++k) {
    const Matrix g = p.lmis[k].evaluate(x);
    states[k].llt.compute(g);
    if (states[k].llt.info() != Eigen::Success) return false;
    const Matrix& l = states[k].llt.matrixLLT();
    double ld = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
      if (!(l(i, i) > 0.0)) return false;
      ld += 2.0 * std::log(l(i, i));
    }
    states[k].logdet = ld;
  }
  if (p.lin_a.rows() > 0) {
    lin_slack = p.lin_a * x + p.lin_b;
    if (!(lin_slack.array() > 0.0).all()) return false;
  }
  return true;
}

double barrier_value(const std::vector<BlockState>& states,
                     const Vector& lin_slack) {
  double v = 0.0;
  for (const auto& s : states) v -= s.logdet;
  if (lin_slack.size() > 0) v -= lin_slack.array().log().sum();
  return v;
}

// Gradient and Hessian of -sum log det F_k(x) - sum log(a_j x + b_j).
void barrier_derivatives(const BarrierProblem& p,
                         const std::vector<BlockState>& states,
                         const Vector& lin_slack, Vector& grad, Matrix& hess) {
  const int n = p.num_vars;
  grad = Vector::Zero(n);
  hess = Matrix::Zero(n, n);
  for (std::size_t k = 0; k < p.lmis.size(); ++k) {
    const auto& f = p.lmis[k];
    const int m = f.dim();
    const Matrix ginv = states[k].llt.solve(Matrix::Identity(m, m));
    std::vector<Matrix> mi(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const auto& ci = f.coeff(i);
      if (ci.empty()) continue;
      double g = 0.0;
      Matrix acc = Matrix::Zero(m, m);
      for (const Entry& e : ci) {
        g += e.value * ginv(e.col, e.row);
        acc.noalias() += e.value * ginv.col(e.row) * ginv.row(e.col);
      }
      grad(i) -= g;
      mi[static_cast<std::size_t>(i)] = std::move(acc);
    }
    for (int i = 0; i < n; ++i) {
      const Matrix& a = mi[static_cast<std::size_t>(i)];
      if (a.size() == 0) continue;
      for (int j = i; j < n; ++j) {
        const auto& cj = f.coeff(j);
        if (cj.empty()) continue;
        double h = 0.0;
        for (const Entry& e : cj) h += e.value * a(e.col, e.row);
        hess(i, j) += h;
        if (j != i) hess(j, i) += h;
      }
    }
  }
  if (lin_slack.size() > 0) {
    const Vector inv = lin_slack.cwiseInverse();
    grad -= p.lin_a.transpose() * inv;
    hess += p.lin_a.transpose() * inv.cwiseAbs2().asDiagonal() * p.lin_a;
  }
}

}  // namespace

BarrierResult solve_barrier(const BarrierProblem& p, const Vector& x_start,
                            const BarrierOptions& opts) {
  const int n = p.num_vars;
  require(x_start.size() == n, ErrorKind::kDimensionMismatch,
          "barrier: start point size");
  for (const auto& f : p.lmis)
    require(f.num_vars() == n, ErrorKind::kDimensionMismatch,
            "barrier: block variable count");
  require(p.lin_a.rows() == 0 || p.lin_a.cols() == n,
          ErrorKind::kDimensionMismatch, "barrier: linear constraint width");
  const Vector c = p.linear_cost.size() > 0 ? p.linear_cost : Vector::Zero(n);
  const Vector w = p.quad_weights.size() > 0 ? p.quad_weights : Vector::Zero(n);
  const Vector x0 = p.quad_center.size() > 0 ? p.quad_center : Vector::Zero(n);

  double barrier_order = static_cast<double>(p.lin_a.rows());
  for (const auto& f : p.lmis) barrier_order += f.dim();

  std::vector<BlockState> states;
  Vector slack;
  BarrierResult res;
  res.x = x_start;
  require(factor_blocks(p, res.x, states, slack), ErrorKind::kInvalidArgument,
          "barrier: start point is not strictly feasible");

  auto stop_reached = [&](const Vector& x) {
    return opts.stop_index && x(*opts.stop_index) >= opts.stop_value;
  };
  if (stop_reached(res.x)) {
    res.early_stop = true;
    res.objective = p.objective(res.x);
    return res;
  }

  double t = opts.t_init;
  Vector grad_b, grad;
  Matrix hess_b, hess;
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    for (int it = 0; it < opts.max_newton_per_center; ++it) {
      barrier_derivatives(p, states, slack, grad_b, hess_b);
      const Vector dxc = res.x - x0;
      grad = t * (c + w.cwiseProduct(dxc)) + grad_b;
      hess = hess_b;
      hess.diagonal() += t * w;
      const double ridge =
          1e-14 * std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
      hess.diagonal().array() += ridge;
      Eigen::LDLT<Matrix> ldlt(hess);
      Vector dx = ldlt.solve(-grad);
      if (!dx.allFinite()) {
        throw Error(ErrorKind::kSolver, "barrier: singular Newton system");
      }
      const double decrement = -grad.dot(dx);
      if (decrement / 2.0 <= opts.decrement_tol) break;

      // Backtracking: stay strictly feasible, then Armijo on the exact
      // difference of the centering objective.
      const double base_barrier = barrier_value(states, slack);
      std::vector<BlockState> trial_states;
      Vector trial_slack;
      double alpha = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls) {
        const Vector xt = res.x + alpha * dx;
        if (factor_blocks(p, xt, trial_states, trial_slack)) {
          const double df =
              alpha * c.dot(dx) +
              (w.array() * (alpha * dx.array() * dxc.array() +
                            0.5 * alpha * alpha * dx.array().square()))
                  .sum();
          const double dphi =
              t * df + barrier_value(trial_states, trial_slack) - base_barrier;
          if (dphi <= 0.25 * alpha * grad.dot(dx) ||
              (alpha < 1e-6 && dphi <= 0.0)) {
            accepted = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      ++res.newton_steps;
      if (!accepted) break;  // rounding floor reached for this t
      res.x += alpha * dx;
      states = std::move(trial_states);
      slack = std::move(trial_slack);
      if (stop_reached(res.x)) {
        res.early_stop = true;
        res.objective = p.objective(res.x);
        res.gap_bound = barrier_order / t;
        return res;
      }
    }
    res.gap_bound = barrier_order / t;
    if (res.gap_bound <= opts.gap_tol) {
      res.objective = p.objective(res.x);
      return res;
    }
    t *= opts.mu;
  }
  throw Error(ErrorKind::kSolver,
              "barrier: duality gap " + std::to_string(res.gap_bound) +
                  " above tolerance after iteration budget");
}

}  // namespace stabren::sdp
