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

#include "stabren/ren.hpp"

#include <algorithm>
#include <cmath>

namespace stabren {

void RenMatrices::validate_shapes() const {
  const auto nx = n_xi(), np = n_phi(), ny = n_y(), nu = n_u();
  require_shape(a_k, nx, nx, "a_k");
  require_shape(b_k1, nx, np, "b_k1");
  require_shape(b_k2, nx, ny, "b_k2");
  require_shape(c_k1, nu, nx, "c_k1");
  require_shape(d_k1, nu, np, "d_k1");
  require_shape(d_k2, nu, ny, "d_k2");
  require_shape(c_k2, np, nx, "c_k2");
  require_shape(d_k3, np, np, "d_k3");
  require_shape(d_k4, np, ny, "d_k4");
  for (const Matrix* m :
       {&a_k, &b_k1, &b_k2, &c_k1, &d_k1, &d_k2, &c_k2, &d_k3, &d_k4})
    require(m->allFinite(), ErrorKind::kNumeric,
            "controller: non-finite entry");
}

RenMatrices RenMatrices::zeros(Eigen::Index nx, Eigen::Index np,
                               Eigen::Index ny, Eigen::Index nu) {
  RenMatrices m;
  m.a_k = Matrix::Zero(nx, nx);
  m.b_k1 = Matrix::Zero(nx, np);
  m.b_k2 = Matrix::Zero(nx, ny);
  m.c_k1 = Matrix::Zero(nu, nx);
  m.d_k1 = Matrix::Zero(nu, np);
  m.d_k2 = Matrix::Zero(nu, ny);
  m.c_k2 = Matrix::Zero(np, nx);
  m.d_k3 = Matrix::Zero(np, np);
  m.d_k4 = Matrix::Zero(np, ny);
  return m;
}

double RenMatrices::max_abs_diff(const RenMatrices& o) const {
  double d = 0.0;
  auto upd = [&d](const Matrix& a, const Matrix& b) {
    if (a.size() > 0) d = std::max(d, (a - b).cwiseAbs().maxCoeff());
  };
  upd(a_k, o.a_k);
  upd(b_k1, o.b_k1);
  upd(b_k2, o.b_k2);
  upd(c_k1, o.c_k1);
  upd(d_k1, o.d_k1);
  upd(d_k2, o.d_k2);
  upd(c_k2, o.c_k2);
  upd(d_k3, o.d_k3);
  upd(d_k4, o.d_k4);
  return d;
}

TransformedRenParams TransformedRenParams::from_matrices(RenMatrices m,
                                                         Nonlinearity phi) {
  TransformedRenParams out;
  static_cast<RenMatrices&>(out) = std::move(m);
  out.phi_tilde = phi.loop_transformed();
  out.phi = std::move(phi);
  out.validate_shapes();
  require(out.phi.size() == out.n_phi(), ErrorKind::kDimensionMismatch,
          "controller: activation count differs from n_phi");
  return out;
}

TransformedRenParams loop_transform_controller(const RenParams& theta) {
  theta.validate_shapes();
  const auto np = theta.n_phi();
  require(theta.phi.size() == np, ErrorKind::kDimensionMismatch,
          "controller: activation count differs from n_phi");
  const Vector s = theta.phi.center();
  const Vector l = theta.phi.radius();
  Eigen::FullPivLU<Matrix> lu(Matrix::Identity(np, np) -
                              s.asDiagonal() * theta.d_k3);
  require(lu.isInvertible(), ErrorKind::kSingular,
          "loop transform: I - S_phi D_K3 is singular");
  const Matrix m = lu.inverse();
  const Matrix ms = m * s.asDiagonal();
  const Matrix ml = m * l.asDiagonal();

  RenMatrices t;
  t.a_k = theta.a_k + theta.b_k1 * ms * theta.c_k2;
  t.b_k1 = theta.b_k1 * ml;
  t.b_k2 = theta.b_k2 + theta.b_k1 * ms * theta.d_k4;
  t.c_k1 = theta.c_k1 + theta.d_k1 * ms * theta.c_k2;
  t.d_k1 = theta.d_k1 * ml;
  t.d_k2 = theta.d_k2 + theta.d_k1 * ms * theta.d_k4;
  t.c_k2 = theta.c_k2 + theta.d_k3 * ms * theta.c_k2;
  t.d_k3 = theta.d_k3 * ml;
  t.d_k4 = theta.d_k4 + theta.d_k3 * ms * theta.d_k4;
  return TransformedRenParams::from_matrices(std::move(t), theta.phi);
}

// With M = (I - S D3)^{-1}:  D3 = (I + D3~ L^{-1} S)^{-1} D3~ L^{-1},
// C2 = (I - D3 S) C2~, D4 = (I - D3 S) D4~, B1 = B1~ L^{-1} M^{-1}, and the
// remaining blocks subtract their shift terms.
RenParams inverse_loop_transform(const TransformedRenParams& tt) {
  tt.validate_shapes();
  const auto np = tt.n_phi();
  const Vector s = tt.phi.center();
  const Vector l = tt.phi.radius();
  require((l.array() > 0.0).all(), ErrorKind::kSingular,
          "inverse loop transform: degenerate sector");
  const Matrix linv = l.cwiseInverse().asDiagonal();
  const Matrix eye = Matrix::Identity(np, np);

  Eigen::FullPivLU<Matrix> lu(eye + tt.d_k3 * linv * s.asDiagonal());
  require(lu.isInvertible(), ErrorKind::kSingular,
          "inverse loop transform: I + D3~ L^-1 S is singular");
  RenParams out;
  out.phi = tt.phi;
  out.d_k3 = lu.solve(Matrix(tt.d_k3 * linv));
  const Matrix i_minus_ds = eye - out.d_k3 * s.asDiagonal();
  const Matrix m_inv = eye - s.asDiagonal() * out.d_k3;
  Eigen::FullPivLU<Matrix> mlu(m_inv);
  require(mlu.isInvertible(), ErrorKind::kSingular,
          "inverse loop transform: I - S D3 is singular");
  const Matrix ms = mlu.solve(Matrix(s.asDiagonal()));

  out.c_k2 = i_minus_ds * tt.c_k2;
  out.d_k4 = i_minus_ds * tt.d_k4;
  out.b_k1 = tt.b_k1 * linv * m_inv;
  out.d_k1 = tt.d_k1 * linv * m_inv;
  out.a_k = tt.a_k - out.b_k1 * ms * out.c_k2;
  out.b_k2 = tt.b_k2 - out.b_k1 * ms * out.d_k4;
  out.c_k1 = tt.c_k1 - out.d_k1 * ms * out.c_k2;
  out.d_k2 = tt.d_k2 - out.d_k1 * ms * out.d_k4;
  return out;
}

Vector solve_equilibrium(const TransformedRenParams& tt, const Vector& xi,
                         const Vector& y, const FixedPointOptions& opts) {
  require(xi.size() == tt.n_xi() && y.size() == tt.n_y(),
          ErrorKind::kDimensionMismatch, "solve_equilibrium: dimensions");
  const Vector b = tt.c_k2 * xi + tt.d_k4 * y;
  return solve_fixed_point(tt.phi_tilde, tt.d_k3, b, Vector::Zero(tt.n_phi()),
                           opts)
      .z;
}

ControllerStep controller_step(const TransformedRenParams& tt,
                               const Vector& xi, const Vector& y,
                               const FixedPointOptions& opts) {
  ControllerStep out;
  out.z = solve_equilibrium(tt, xi, y, opts);
  out.xi_next = tt.a_k * xi + tt.b_k1 * out.z + tt.b_k2 * y;
  out.u = tt.c_k1 * xi + tt.d_k1 * out.z + tt.d_k2 * y;
  return out;
}

ControllerStep controller_step_original(const RenParams& theta,
                                        const Vector& xi, const Vector& y,
                                        double tol) {
  const auto np = theta.n_phi();
  const Vector b = theta.c_k2 * xi + theta.d_k4 * y;
  Vector w = Vector::Zero(np);
  auto resid = [&](const Vector& w_) {
    return Vector(w_ - theta.phi.apply(b + theta.d_k3 * w_));
  };
  Vector r = resid(w);
  for (int it = 0; it < 100 && r.lpNorm<Eigen::Infinity>() > tol; ++it) {
    const Vector gp = theta.phi.slope(b + theta.d_k3 * w);
    const Matrix jac = Matrix::Identity(np, np) - gp.asDiagonal() * theta.d_k3;
    const Vector step = jac.fullPivLu().solve(-r);
    double alpha = 1.0;
    const double rn = r.lpNorm<Eigen::Infinity>();
    for (int ls = 0; ls < 40; ++ls) {
      const Vector trial = w + alpha * step;
      const Vector rt = resid(trial);
      if (rt.lpNorm<Eigen::Infinity>() < rn) {
        w = trial;
        r = rt;
        break;
      }
      alpha *= 0.5;
    }
  }
  require(r.lpNorm<Eigen::Infinity>() <= tol, ErrorKind::kNonConvergence,
          "controller_step_original: Newton did not converge");
  ControllerStep out;
  out.z = w;
  out.xi_next = theta.a_k * xi + theta.b_k1 * w + theta.b_k2 * y;
  out.u = theta.c_k1 * xi + theta.d_k1 * w + theta.d_k2 * y;
  return out;
}

EquilibriumJacobian equilibrium_jacobian(const TransformedRenParams& tt,
                                         const Vector& xi, const Vector& y,
                                         const Vector& z) {
  const auto np = tt.n_phi();
  const Vector v = tt.c_k2 * xi + tt.d_k3 * z + tt.d_k4 * y;
  EquilibriumJacobian j;
  j.core = implicit_sensitivity(tt.phi_tilde.slope(v), tt.d_k3);
  j.wrt_xi = j.core * tt.c_k2;
  j.wrt_y = j.core * tt.d_k4;
  // d(M x)/dM_{rc} = e_r x_c, so column (r, c) of the parameter Jacobian is
  // core.col(r) * x(c).
  auto param_jac = [&](const Vector& x) {
    Matrix out(np, np * x.size());
    for (Eigen::Index c = 0; c < x.size(); ++c)
      for (Eigen::Index r = 0; r < np; ++r)
        out.col(c * np + r) = j.core.col(r) * x(c);
    return out;
  };
  j.wrt_c_k2 = param_jac(xi);
  j.wrt_d_k3 = param_jac(z);
  j.wrt_d_k4 = param_jac(y);
  return j;
}

double contraction_margin(const TransformedRenParams& tt,
                          const Vector& lambda) {
  require(lambda.size() == tt.n_phi(), ErrorKind::kDimensionMismatch,
          "contraction_margin: lambda size");
  require((lambda.array() > 0.0).all(), ErrorKind::kInvalidArgument,
          "contraction_margin: lambda must be positive");
  const Vector sq = lambda.cwiseSqrt();
  const Matrix scaled =
      sq.asDiagonal() * tt.d_k3 * sq.cwiseInverse().asDiagonal();
  return spectral_norm(scaled);
}

}  // namespace stabren
